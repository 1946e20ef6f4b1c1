#include "procrecon/loss.hpp"

#include <string>

#include "procrecon/random.hpp"

namespace procrecon {

SilhouetteMask render_generator_view(const GeneratorOutput& out, const GeneratorInfo& gen, Camera cam,
                                     const RenderOptions& opts) {
  cam.target = out.anchor;
  const auto tris = select_triangles(out.mesh, gen.mask_excluded_parts);
  return render_silhouette(out.mesh.positions, tris, cam, opts);
}

MultiviewLoss multiview_loss(const ParameterVector& params, const std::vector<Camera>& cams,
                             const std::vector<SilhouetteMask>& refs, const GeneratorInfo& gen, LevelOfDetail lod,
                             const MultiviewOptions& opts) {
  if (!gen.differentiable || !gen.generate)
    throw UnsupportedOperation("generator '" + gen.id +
                               "' has no Jacobian; use the genetic reconstruction path (reconstruct_tree)");
  if (cams.empty() || cams.size() != refs.size())
    throw ValidationError("multiview_loss: need one camera per reference (got " + std::to_string(cams.size()) +
                          " cameras, " + std::to_string(refs.size()) + " references)");
  check_lod(gen, lod);

  const GeneratorOutput out = gen.generate(params, lod);
  const auto tris = select_triangles(out.mesh, gen.mask_excluded_parts);
  const std::size_t n = cams.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  MultiviewLoss result;
  result.d_cameras.resize(n);
  std::vector<double> d_pos(out.mesh.positions.size(), 0.0);
  std::array<double, 3> d_anchor{};
  for (std::size_t i = 0; i < n; ++i) {
    Camera cam = cams[i].with_resolution(refs[i].width, refs[i].height);
    cam.target = out.anchor;
    SilhouetteMask img = render_silhouette(out.mesh.positions, tris, cam, opts.render);
    auto [loss, d_pixels] = mse(img, refs[i]);
    const RenderGradients g = render_backward(out.mesh.positions, tris, cam, d_pixels, mix_seed(opts.seed, i), opts.render);
    result.loss += loss * inv_n;
    for (std::size_t k = 0; k < d_pos.size(); ++k) d_pos[k] += g.d_pos[k] * inv_n;
    for (std::size_t k = 0; k < 3; ++k) d_anchor[k] += g.d_target[k] * inv_n;
    for (std::size_t k = 0; k < kCameraDofCount; ++k) result.d_cameras[i][k] = g.d_camera[k] * inv_n;
    if (opts.keep_renders) result.rendered.push_back(std::move(img));
  }

  result.d_params.assign(params.size(), 0.0);
  out.jacobian.accumulate_transpose_product(d_pos, result.d_params);
  out.anchor_jacobian.accumulate_transpose_product(d_anchor, result.d_params);
  const auto mask = discrete_mask(params.specs());
  for (std::size_t k = 0; k < mask.size(); ++k)
    if (mask[k]) result.d_params[k] = 0.0;
  return result;
}

MultiviewLoss multiview_loss(const ParameterVector& params, const std::vector<Camera>& cams,
                             const std::vector<SilhouetteMask>& refs, const std::string& gen_id, LevelOfDetail lod,
                             const MultiviewOptions& opts) {
  return multiview_loss(params, cams, refs, find_generator(gen_id), lod, opts);
}

}  // namespace procrecon
