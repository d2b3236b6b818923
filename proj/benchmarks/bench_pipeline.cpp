// Microbenchmarks for the pipeline hot paths: pixel metrics, rigid
// alignment, tiling, and histogram matching.

#include <benchmark/benchmark.h>

#include <cmath>

#include "stainpipe/ecc.hpp"
#include "stainpipe/histogram.hpp"
#include "stainpipe/metrics.hpp"
#include "stainpipe/synth.hpp"
#include "stainpipe/tiling.hpp"
#include "stainpipe/tissue_mask.hpp"

using namespace stainpipe;

namespace {

TissueMask all_tissue(int width, int height) {
  TissueMask mask;
  mask.width = width;
  mask.height = height;
  mask.bits.assign(static_cast<std::size_t>(width) * height, 1);
  mask.tissue_fraction = 1.0;
  return mask;
}

void bm_mse(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const CoreImage a = synth_texture(n, n, 1);
  const CoreImage b = synth_texture(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(mse(a, b));
  state.SetItemsProcessed(state.iterations() * a.pixel_count());
}
BENCHMARK(bm_mse)->Arg(256)->Arg(512);

void bm_pcc(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const CoreImage a = synth_texture(n, n, 1);
  const CoreImage b = synth_texture(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(pcc(a, b));
  state.SetItemsProcessed(state.iterations() * a.pixel_count());
}
BENCHMARK(bm_pcc)->Arg(256)->Arg(512);

void bm_ssim(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const CoreImage a = synth_texture(n, n, 1);
  const CoreImage b = synth_texture(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
  state.SetItemsProcessed(state.iterations() * a.pixel_count());
}
BENCHMARK(bm_ssim)->Arg(256)->Arg(512);

void bm_ecc_align(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const CoreImage fixed = synth_texture(n, n, 3);
  RigidTransform motion;
  motion.theta = 2.0 * M_PI / 180.0;
  motion.tx = 4.5;
  motion.ty = -3.0;
  const CoreImage moving = warp_rigid(fixed, motion);
  for (auto _ : state) benchmark::DoNotOptimize(ecc_align(moving, fixed));
}
BENCHMARK(bm_ecc_align)->Arg(256)->Unit(benchmark::kMillisecond);

void bm_tiling_roundtrip(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const CoreImage core = synth_texture(n, n, 4);
  const TissueMask mask = all_tissue(n, n);
  const PatchGrid grid = make_grid(n, n, 256, 0.0);
  for (auto _ : state) {
    const auto patches = extract_patches(core, mask, grid);
    benchmark::DoNotOptimize(
        reconstruct_core(patches, grid, core.core_id, core.mpp, core.stain_state));
  }
  state.SetItemsProcessed(state.iterations() * core.pixel_count());
}
BENCHMARK(bm_tiling_roundtrip)->Arg(1024)->Unit(benchmark::kMillisecond);

void bm_match_histogram(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const CoreImage src = synth_texture(n, n, 5);
  const CoreImage ref = synth_texture(n, n, 6);
  const TissueMask mask = all_tissue(n, n);
  const ChannelCdf target = compute_channel_cdf(ref, mask);
  for (auto _ : state) benchmark::DoNotOptimize(match_histogram(src, mask, target));
  state.SetItemsProcessed(state.iterations() * src.pixel_count());
}
BENCHMARK(bm_match_histogram)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
