#include "dff/align.hpp"
#include "dff/descent.hpp"
#include "dff/face_model.hpp"
#include "dff/net.hpp"
#include "dff/renderer.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace dff;

namespace {

const face::MorphableModel& model()
{
    static const face::MorphableModel m = face::generate_synthetic_model(1, 1500, 8, 6);
    return m;
}

const render::RenderedSample& sample()
{
    static const render::RenderedSample s = render::generate_dataset(model(), 1, 2).front();
    return s;
}

Eigen::MatrixXd gaussian(Eigen::Index r, Eigen::Index c, std::uint64_t seed, double scale)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, scale);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i)
        m.data()[i] = n(rng);
    return m;
}

void bm_forward(benchmark::State& state)
{
    net::NetConfig c;
    c.width = c.height = static_cast<int>(state.range(0));
    const net::NetWeights w = net::init_weights(c);
    RgbImage image(c.width, c.height);
    image.data.assign(image.data.size(), 0.4);
    for (auto _ : state)
        benchmark::DoNotOptimize(net::forward(w, image));
}
BENCHMARK(bm_forward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void bm_rasterize(benchmark::State& state)
{
    const face::FaceMesh mesh = face::synthesize_shape(model(), face::ShapeParams::zero(model()));
    const int res = static_cast<int>(state.range(0));
    const face::CameraParams w{res * 0.35, 0.1, 0.4, 0.0, res / 2.0, res / 2.0};
    for (auto _ : state)
        benchmark::DoNotOptimize(render::rasterize(mesh, w, res, res));
}
BENCHMARK(bm_rasterize)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

void bm_align_iteration(benchmark::State& state)
{
    net::NetConfig c;
    const net::FeatureMap f = net::forward(net::init_weights(c), sample().image);
    const Eigen::Index len = 160 * f.dim();
    align::DescentStage stage{gaussian(136, len, 3, 1e-4), Eigen::VectorXd::Zero(136), gaussian(6, len, 4, 1e-6),
                              Eigen::VectorXd::Zero(6)};
    const Box box = descent::training_box(sample().landmarks68);
    for (auto _ : state)
        benchmark::DoNotOptimize(align::align_from_features(model(), f, box, {stage}, align::AlignConfig{}));
}
BENCHMARK(bm_align_iteration)->Unit(benchmark::kMillisecond);

void bm_ridge(benchmark::State& state)
{
    const Eigen::Index n = state.range(0), f = state.range(1);
    const Eigen::MatrixXd x = gaussian(n, f, 5, 1.0), y = gaussian(n, 136, 6, 1.0);
    for (auto _ : state)
        benchmark::DoNotOptimize(descent::ridge_solve(x, y, 0.2 * static_cast<double>(n)));
}
BENCHMARK(bm_ridge)->Args({200, 5120})->Args({2000, 512})->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
