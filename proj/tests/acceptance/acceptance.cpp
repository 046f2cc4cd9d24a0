// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero when any fails.

#include "cli.hpp"
#include "oracles.hpp"

#include "dff/align.hpp"
#include "dff/descent.hpp"
#include "dff/eval.hpp"
#include "dff/face_model.hpp"
#include "dff/image_io.hpp"
#include "dff/matching.hpp"
#include "dff/net.hpp"
#include "dff/renderer.hpp"
#include "dff/segmentation.hpp"
#include "dff/serialize.hpp"
#include "dff/tensor_io.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace dff;
namespace fs = std::filesystem;

namespace {

struct Outcome
{
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string s(const fs::path& p) { return p.string(); }

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void run_cli(const std::vector<std::string>& args)
{
    const int code = cli::cli_dispatch(args);
    if (code != cli::kExitOk)
        throw std::runtime_error("dff " + args.front() + " exited with " + std::to_string(code));
}

Eigen::MatrixXd gaussian(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0)
{
    std::normal_distribution<double> n(0.0, scale);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i)
        m.data()[i] = n(rng);
    return m;
}

RgbImage random_image(int w, int h, std::uint64_t seed)
{
    RgbImage img(w, h);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : img.data)
        v = u(rng);
    return img;
}

LabelMap random_labels(int w, int h, int k, std::uint64_t seed)
{
    LabelMap l(w, h);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> pick(0, k - 1);
    for (auto& v : l.data)
        v = u(rng) < 0.2 ? kNoLabel : static_cast<std::uint32_t>(pick(rng));
    return l;
}

Eigen::VectorXd prior_sample(const face::MorphableModel& m, std::mt19937_64& rng)
{
    Eigen::VectorXd p(m.shape_param_count());
    for (int k = 0; k < m.id_count(); ++k)
        p[k] = gaussian(1, 1, rng)(0, 0) * std::sqrt(m.id_eigen[k]);
    for (int k = 0; k < m.exp_count(); ++k)
        p[m.id_count() + k] = gaussian(1, 1, rng)(0, 0) * std::sqrt(m.exp_eigen[k]);
    return p;
}

// Number of connected pieces of one patch, by flood fill over shared triangle edges.
int component_count(const face::FaceMesh& m, const seg::Segmentation& sg, std::uint32_t patch)
{
    std::map<std::pair<int, int>, std::vector<int>> by_edge;
    for (int t = 0; t < m.triangle_count(); ++t) {
        const auto& tri = m.triangles[static_cast<std::size_t>(t)];
        for (int k = 0; k < 3; ++k)
            by_edge[std::minmax(tri[k], tri[(k + 1) % 3])].push_back(t);
    }
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(m.triangle_count()));
    for (const auto& [e, ts] : by_edge)
        for (int a : ts)
            for (int b : ts)
                if (a != b)
                    adj[static_cast<std::size_t>(a)].push_back(b);
    std::vector<char> seen(adj.size(), 0);
    int comps = 0;
    for (int t = 0; t < m.triangle_count(); ++t) {
        if (seen[static_cast<std::size_t>(t)] || sg.patch_of[static_cast<std::size_t>(t)] != patch)
            continue;
        ++comps;
        std::queue<int> q;
        q.push(t);
        seen[static_cast<std::size_t>(t)] = 1;
        while (!q.empty()) {
            const int u = q.front();
            q.pop();
            for (int w : adj[static_cast<std::size_t>(u)])
                if (!seen[static_cast<std::size_t>(w)] && sg.patch_of[static_cast<std::size_t>(w)] == patch) {
                    seen[static_cast<std::size_t>(w)] = 1;
                    q.push(w);
                }
        }
    }
    return comps;
}

// ---- shared artifacts ----------------------------------------------------------

// Desk-scale run directory: model, segmentations and a network trained on 32 images.
struct DeskRun
{
    fs::path dir;
    fs::path model, data, seg, weights;
    double train_seconds = 0.0;
};

const DeskRun& desk_run()
{
    static const DeskRun run = [] {
        DeskRun r;
        r.dir = fs::absolute("acceptance_run/desk");
        fs::remove_all(r.dir);
        fs::create_directories(r.dir);
        r.model = r.dir / "model.dfft";
        r.data = r.dir / "train";
        r.seg = r.dir / "seg.dfft";
        r.weights = r.dir / "weights.dfft";
        run_cli({"gen-model", "--seed", "7", "--out", s(r.model)});
        run_cli({"gen-data", "--seed", "8", "--model", s(r.model), "--out", s(r.data), "--count", "32"});
        run_cli({"segment", "--seed", "9", "--model", s(r.model), "--out", s(r.seg), "--count", "8", "--patches", "32"});
        const auto t0 = Clock::now();
        run_cli({"train-dff", "--seed", "10", "--model", s(r.model), "--data", s(r.data / "samples.dfft"), "--segments",
                 s(r.seg), "--out", s(r.weights), "--epochs", "20"});
        r.train_seconds = seconds_since(t0);
        return r;
    }();
    return run;
}

// ---- criteria --------------------------------------------------------------------

Outcome gradient_correctness()
{
    const auto t0 = Clock::now();
    net::NetConfig c;
    c.width = c.height = 16;
    c.seed = 3;
    net::NetWeights w = net::init_weights(c);
    std::vector<net::LossLayerParams> layers;
    net::TrainingExample ex{random_image(16, 16, 1), {}};
    for (int sgi = 0; sgi < 3; ++sgi) {
        layers.push_back(net::init_loss_layer(32, c.feature_dim, 20 + static_cast<std::uint64_t>(sgi)));
        ex.labels.push_back(random_labels(16, 16, 32, 30 + static_cast<std::uint64_t>(sgi)));
    }
    const std::vector<const net::TrainingExample*> batch = {&ex};
    const net::LossResult g = net::loss_and_gradients(w, layers, batch);

    std::mt19937_64 rng(5);
    const double h = 1e-4;
    double worst = 0.0;
    int coords = 0;
    const auto central = [&](double& x) {
        const double x0 = x;
        x = x0 + h;
        const double lp = net::batch_loss(w, layers, batch);
        x = x0 - h;
        const double lm = net::batch_loss(w, layers, batch);
        x = x0;
        return (lp - lm) / (2.0 * h);
    };
    for (std::size_t p = 0; p < w.params.size(); ++p)
        for (int k = 0; k < 12; ++k) {
            Eigen::MatrixXd& m = w.params[p].value;
            const Eigen::Index i = std::uniform_int_distribution<Eigen::Index>(0, m.size() - 1)(rng);
            worst = std::max(worst, oracle::relative_error(g.weight_grads[p].data()[i], central(m.data()[i])));
            ++coords;
        }
    for (std::size_t l = 0; l < layers.size(); ++l)
        for (int k = 0; k < 20; ++k) {
            Eigen::MatrixXd& m = layers[l].class_vectors;
            const Eigen::Index i = std::uniform_int_distribution<Eigen::Index>(0, m.size() - 1)(rng);
            worst = std::max(worst, oracle::relative_error(g.layer_grads[l].data()[i], central(m.data()[i])));
            ++coords;
        }
    const double secs = seconds_since(t0);
    return {coords >= 200 && worst < 1e-4 && secs < 60.0,
            std::to_string(coords) + " coordinates, max relative error " + fmt("%.3g", worst) + ", " +
                fmt("%.1f", secs) + " s (limits 1e-4, 60 s)"};
}

Outcome loss_sanity()
{
    net::FeatureMap f{1, 1, Eigen::MatrixXd(Eigen::VectorXd::Unit(2, 0))};
    LabelMap l(1, 1);
    l.at(0, 0) = 0;
    const double separated = net::angular_softmax_loss(f, l, {Eigen::MatrixXd::Identity(2, 2)});
    Eigen::MatrixXd tie(2, 2);
    tie << 0, 1, 0, -1;
    const double symmetric = net::angular_softmax_loss(f, l, {tie});
    const double e1 = std::abs(separated - std::log1p(std::exp(-1.0)));
    const double e2 = std::abs(symmetric - std::log(2.0));
    const bool published = std::abs(separated - 0.313262) < 1e-6;
    return {e1 < 1e-9 && e2 < 1e-9 && published,
            "separated " + fmt("%.9f", separated) + ", symmetric " + fmt("%.9f", symmetric) + " (errors " +
                fmt("%.2g", e1) + ", " + fmt("%.2g", e2) + ")"};
}

Outcome trainability()
{
    const DeskRun& r = desk_run();
    std::istringstream in(slurp(s(r.weights) + ".log.txt"));
    std::string line;
    std::vector<std::pair<double, double>> log;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream ls(line);
        int epoch;
        double loss, acc;
        ls >> epoch >> loss >> acc;
        log.emplace_back(loss, acc);
    }
    if (log.size() != 21)
        return {false, "expected 21 log rows, found " + std::to_string(log.size())};
    const double chance = 1.0 / 32.0;
    const bool ok = log.back().first < log.front().first && log.back().second > 5.0 * chance && r.train_seconds < 600.0;
    return {ok, "loss " + fmt("%.4f", log.front().first) + " -> " + fmt("%.4f", log.back().first) + ", accuracy " +
                    fmt("%.3f", log.back().second) + " (needs > " + fmt("%.4f", 5.0 * chance) + "), " +
                    fmt("%.0f", r.train_seconds) + " s (limit 600 s)"};
}

Outcome raster_visibility()
{
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> ang(-0.8, 0.8);
    int raster_ok = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const face::FaceMesh mesh = oracle::random_triangle_soup(rng, 200, 1.0);
        const face::CameraParams w{20.0, ang(rng), ang(rng), ang(rng), 32.0, 32.0};
        raster_ok += render::rasterize(mesh, w, 64, 64).triangle_id == oracle::brute_force_triangle_ids(mesh, w, 64, 64);
    }

    const face::MorphableModel model = face::generate_synthetic_model(12, 1500, 8, 6);
    std::uniform_real_distribution<double> yaw(-1.5, 1.5), tilt(-0.35, 0.35), scale(38.0, 52.0);
    int sampled = 0, agree = 0, outside_band = 0;
    while (sampled < 10000) {
        const face::ShapeParams p = face::ShapeParams::from_stacked(model, prior_sample(model, rng));
        const face::FaceMesh mesh = face::synthesize_shape(model, p);
        const face::CameraParams w{scale(rng), tilt(rng), yaw(rng), tilt(rng), 64.0, 64.0};
        const render::DepthBuffer buf = render::rasterize(mesh, w, 128, 128);
        std::vector<int> ids;
        std::uniform_int_distribution<int> pick(0, mesh.vertex_count() - 1);
        for (int k = 0; k < 500; ++k)
            ids.push_back(pick(rng));
        const auto vis = render::vertex_visibility(mesh, w, ids, buf);
        for (std::size_t k = 0; k < ids.size(); ++k) {
            const auto rc = oracle::ray_cast_visibility(mesh, w, ids[k], 128, 128);
            if (rc.visible == vis[k])
                ++agree;
            else if (!rc.in_tie_band)
                ++outside_band;
        }
        sampled += static_cast<int>(ids.size());
    }
    const double rate = static_cast<double>(agree) / sampled;
    return {raster_ok == 20 && rate >= 0.999 && outside_band == 0,
            std::to_string(raster_ok) + "/20 rasters exact, visibility agreement " + fmt("%.5f", rate) + " over " +
                std::to_string(sampled) + " vertices, " + std::to_string(outside_band) + " outside the tie band"};
}

Outcome ridge_shape_fit()
{
    std::mt19937_64 rng(51);
    std::uniform_int_distribution<int> dim(2, 40), tdim(1, 5);
    std::uniform_real_distribution<double> lam(1e-3, 10.0);
    double worst_ridge = 0.0;
    for (int inst = 0; inst < 50; ++inst) {
        const int n = dim(rng), f = dim(rng);
        const Eigen::MatrixXd x = gaussian(n, f, rng), y = gaussian(n, tdim(rng), rng);
        const double lambda = lam(rng);
        const descent::RidgeSolution sol = descent::ridge_solve(x, y, lambda);
        const Eigen::MatrixXd ref = oracle::ridge_normal_equations(x, y, lambda);
        Eigen::MatrixXd got(f + 1, y.cols());
        got << sol.R.transpose(), sol.b.transpose();
        worst_ridge = std::max(worst_ridge, (got - ref).norm() / ref.norm());
    }

    const face::MorphableModel m = face::generate_synthetic_model(13, 1500, 8, 6);
    double worst_fit = 0.0;
    for (int inst = 0; inst < 5; ++inst) {
        const Eigen::VectorXd p_true = prior_sample(m, rng);
        std::uniform_real_distribution<double> a(-0.6, 0.6);
        const face::CameraParams w{25.0, a(rng), a(rng), a(rng), 32.0, 30.0};
        const Eigen::VectorXd target = align::interleave(face::project_points(
            face::select_vertices(face::synthesize_vertices(m, face::ShapeParams::from_stacked(m, p_true)),
                                  m.landmarks68),
            w));
        align::AlignConfig cfg;
        cfg.omega_reg = 1e-8;
        const Eigen::VectorXd p = align::fit_shape(m, target, w, cfg).stacked();
        worst_fit = std::max(worst_fit, (p - p_true).norm() / p_true.norm());
    }

    const face::CameraParams w{1.7, 0.1, -0.4, 0.05, 40.0, 35.0};
    const Eigen::VectorXd target =
        align::interleave(face::project_points(
            face::select_vertices(face::synthesize_vertices(m, face::ShapeParams::zero(m)), m.landmarks68), w)) +
        gaussian(136, 1, rng, 0.5);
    align::AlignConfig cfg;
    const Eigen::VectorXd a = descent::update_generic_shape(m, {target}, {w}, cfg).stacked();
    const Eigen::VectorXd b = align::fit_shape(m, target, w, cfg).stacked();
    const double generic = (a - b).cwiseAbs().maxCoeff() / (1.0 + b.cwiseAbs().maxCoeff());

    return {worst_ridge < 1e-8 && worst_fit < 1e-4 && generic < 1e-10,
            "ridge " + fmt("%.2g", worst_ridge) + " (1e-8), fit_shape " + fmt("%.2g", worst_fit) +
                " (1e-4), generic N=1 " + fmt("%.2g", generic) + " (1e-10)"};
}

Outcome cvt_properties()
{
    const face::MorphableModel model = io::get_model(io::TensorContainer::read(s(desk_run().model)));
    const face::FaceMesh mesh = face::synthesize_shape(model, face::ShapeParams::zero(model));
    const auto bank = io::get_segmentations(io::TensorContainer::read(s(desk_run().seg)));
    int bad_partition = 0, disconnected = 0, energy_rises = 0, mismatched = 0;
    for (const auto& sg : bank) {
        if (!seg::check_partition(mesh, sg).empty())
            ++bad_partition;
        std::vector<int> sizes(static_cast<std::size_t>(sg.patch_count), 0);
        for (auto p : sg.patch_of)
            if (p < sizes.size())
                ++sizes[p];
            else
                ++bad_partition;
        for (int k = 0; k < sg.patch_count; ++k) {
            if (sizes[static_cast<std::size_t>(k)] == 0)
                ++bad_partition;
            else if (component_count(mesh, sg, static_cast<std::uint32_t>(k)) != 1)
                ++disconnected;
        }
        seg::CvtTrace trace;
        const seg::Segmentation again = seg::cvt_segment(mesh, sg.patch_count, sg.seed, &trace);
        for (std::size_t i = 1; i < trace.energy.size(); ++i)
            energy_rises += trace.energy[i] > trace.energy[i - 1] * (1.0 + 1e-12);
        mismatched += !(again == sg);
    }
    const bool deterministic = seg::generate_segmentation_bank(mesh, 8, 32, 9) == bank;
    return {bank.size() == 8 && bad_partition == 0 && disconnected == 0 && energy_rises == 0 && mismatched == 0 &&
                deterministic,
            std::to_string(bank.size()) + " segmentations: " + std::to_string(bad_partition) + " partition faults, " +
                std::to_string(disconnected) + " disconnected patches, " + std::to_string(energy_rises) +
                " energy increases, " + (deterministic && mismatched == 0 ? "deterministic" : "not deterministic")};
}

Outcome matching_self_consistency()
{
    const DeskRun& r = desk_run();
    const net::NetWeights weights = io::get_weights(io::TensorContainer::read(s(r.weights)));
    std::size_t masked = 0, identical = 0;
    for (int i = 0; i < 4; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "img_%04d.png", i);
        const RgbImage image = io::read_png(s(r.data / name));
        const net::FeatureMap f = net::forward(weights, image);
        const match::Mask mask = match::face_mask(image);
        const match::DenseMatch d = match::dense_match(f, mask, f, mask, 12.0);
        for (int y = 0; y < image.height; ++y)
            for (int x = 0; x < image.width; ++x)
                if (mask.at(x, y)) {
                    ++masked;
                    identical += d.correspondence.at(x, y) == match::pack_pixel(x, y, image.width);
                }
    }
    const double self_rate = masked ? static_cast<double>(identical) / masked : 0.0;

    // Exhaustive oracle on 8x8 toys with random masks.
    int toy_mismatch = 0;
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 10; ++trial) {
        net::FeatureMap a{8, 8, gaussian(4, 64, rng)}, b{8, 8, gaussian(4, 64, rng)};
        a.features.colwise().normalize();
        b.features.colwise().normalize();
        std::bernoulli_distribution keep(0.7);
        match::Mask sm{8, 8, std::vector<bool>(64)}, tm{8, 8, std::vector<bool>(64)};
        for (int i = 0; i < 64; ++i) {
            sm.data[static_cast<std::size_t>(i)] = keep(rng);
            tm.data[static_cast<std::size_t>(i)] = keep(rng);
        }
        std::vector<match::Pixel> where, sources;
        std::vector<Eigen::Index> cols;
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x)
                if (tm.at(x, y)) {
                    where.push_back({x, y});
                    cols.push_back(y * 8 + x);
                }
        Eigen::MatrixXd cand(4, static_cast<Eigen::Index>(cols.size()));
        for (std::size_t j = 0; j < cols.size(); ++j)
            cand.col(static_cast<Eigen::Index>(j)) = b.features.col(cols[j]);
        const double threshold = 30.0;
        const match::DenseMatch dense = match::dense_match(a, sm, b, tm, threshold);
        std::vector<match::MatchPair> expected;
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) {
                if (!sm.at(x, y))
                    continue;
                sources.push_back({x, y});
                double angle = 0.0;
                const Eigen::Index j = oracle::brute_force_nearest(a.at(x, y), cand, angle);
                if (j >= 0 && angle <= threshold)
                    expected.push_back({{x, y}, where[static_cast<std::size_t>(j)], angle});
            }
        const match::MatchSet sparse = match::sparse_match(a, sources, b, tm, threshold);
        const auto same = [&](const std::vector<match::MatchPair>& got) {
            if (got.size() != expected.size())
                return false;
            for (std::size_t k = 0; k < got.size(); ++k)
                if (!(got[k].source == expected[k].source) || !(got[k].target == expected[k].target) ||
                    std::abs(got[k].angle_deg - expected[k].angle_deg) > 1e-9 * (1.0 + expected[k].angle_deg))
                    return false;
            return true;
        };
        toy_mismatch += !same(dense.matches.pairs) + !same(sparse.pairs);
    }
    return {self_rate >= 0.99 && toy_mismatch == 0,
            "self match " + fmt("%.4f", self_rate) + " of " + std::to_string(masked) + " masked pixels (needs 0.99), " +
                std::to_string(toy_mismatch) + " toy mismatches against the oracle"};
}

Outcome end_to_end()
{
    const auto t0 = Clock::now();
    const fs::path dir = fs::absolute("acceptance_run/end_to_end");
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path model = dir / "model.dfft", train = dir / "train", test = dir / "test", seg = dir / "seg.dfft",
                   weights = dir / "weights.dfft", cascade = dir / "cascade.dfft";
    run_cli({"gen-model", "--seed", "101", "--out", s(model)});
    run_cli({"gen-data", "--seed", "102", "--model", s(model), "--out", s(train), "--count", "200"});
    run_cli({"gen-data", "--seed", "103", "--model", s(model), "--out", s(test), "--count", "50"});
    run_cli({"segment", "--seed", "104", "--model", s(model), "--out", s(seg)});
    run_cli({"train-dff", "--seed", "105", "--model", s(model), "--data", s(train / "samples.dfft"), "--segments",
             s(seg), "--out", s(weights)});
    run_cli({"learn-cascade", "--model", s(model), "--data", s(train / "samples.dfft"), "--weights", s(weights), "--out",
             s(cascade)});

    const face::MorphableModel m = io::get_model(io::TensorContainer::read(s(model)));
    const auto samples = io::get_samples(io::TensorContainer::read(s(test / "samples.dfft")));
    const net::NetWeights w = io::get_weights(io::TensorContainer::read(s(weights)));
    const auto stages = io::get_cascade(io::TensorContainer::read(s(cascade)));
    std::vector<double> nme(stages.size() + 1, 0.0);
    for (const auto& smp : samples) {
        const align::AlignResult r =
            align::align(m, smp.image, descent::training_box(smp.landmarks68), w, stages, align::AlignConfig{});
        const Box box = render::landmark_box(smp.landmarks68, 0.0);
        for (std::size_t k = 0; k < r.trace.size(); ++k)
            nme[k] += eval::nme_bbox(align::deinterleave(r.trace[k]), smp.landmarks68, {}, box) /
                      static_cast<double>(samples.size());
    }
    const double secs = seconds_since(t0);
    bool decreasing = stages.size() == 3;
    for (std::size_t k = 1; k < nme.size(); ++k)
        decreasing = decreasing && nme[k] < nme[k - 1];
    std::string trace;
    for (double v : nme)
        trace += (trace.empty() ? "" : ", ") + fmt("%.4f", v);
    return {decreasing && nme.back() <= 0.5 * nme.front() && secs < 1800.0,
            "held-out NME " + trace + " (final must be <= " + fmt("%.4f", 0.5 * nme.front()) +
                " and strictly decreasing), " + fmt("%.0f", secs) + " s (limit 1800 s)"};
}

Outcome unit_norm()
{
    const DeskRun& r = desk_run();
    const net::NetWeights trained = io::get_weights(io::TensorContainer::read(s(r.weights)));
    net::NetConfig c = trained.config;
    c.seed = 77;
    const net::NetWeights fresh = net::init_weights(c);
    const auto samples = io::get_samples(io::TensorContainer::read(s(r.data / "samples.dfft")));
    double worst = 0.0;
    long long checked = 0;
    std::mt19937_64 rng(71);
    for (const net::NetWeights* w : {&trained, &fresh})
        for (int i = 0; i < 4; ++i) {
            const net::FeatureMap f = net::forward(*w, samples[static_cast<std::size_t>(i)].image);
            for (Eigen::Index p = 0; p < f.features.cols(); ++p, ++checked)
                worst = std::max(worst, std::abs(f.features.col(p).norm() - 1.0));
            std::uniform_real_distribution<double> ux(0.0, f.width - 1.0), uy(0.0, f.height - 1.0);
            for (int k = 0; k < 500; ++k, ++checked)
                worst = std::max(worst, std::abs(net::sample_feature(f, ux(rng), uy(rng)).norm() - 1.0));
        }
    return {worst < 1e-6, std::to_string(checked) + " vectors, max |norm - 1| = " + fmt("%.3g", worst)};
}

Outcome determinism()
{
    const fs::path dir = fs::absolute("acceptance_run/determinism");
    const fs::path model = dir / "model.dfft", data = dir / "data", seg = dir / "seg.dfft", weights = dir / "weights.dfft",
                   cascade = dir / "cascade.dfft", marks = dir / "landmarks.txt";
    const auto run_once = [&] {
        fs::remove_all(dir);
        fs::create_directories(dir);
        run_cli({"gen-model", "--seed", "201", "--out", s(model)});
        run_cli({"gen-data", "--seed", "202", "--model", s(model), "--out", s(data), "--count", "12"});
        run_cli({"segment", "--seed", "203", "--model", s(model), "--out", s(seg)});
        run_cli({"train-dff", "--seed", "204", "--model", s(model), "--data", s(data / "samples.dfft"), "--segments",
                 s(seg), "--out", s(weights), "--epochs", "3"});
        run_cli({"learn-cascade", "--model", s(model), "--data", s(data / "samples.dfft"), "--weights", s(weights),
                 "--out", s(cascade)});
        run_cli({"align", "--model", s(model), "--weights", s(weights), "--cascade", s(cascade), "--image",
                 s(data / "img_0000.png"), "--box", "8,8,48,48", "--out", s(marks)});
        std::map<std::string, std::string> bytes;
        for (const auto& e : fs::recursive_directory_iterator(dir))
            if (e.is_regular_file())
                bytes[fs::relative(e.path(), dir).string()] = slurp(e.path());
        return bytes;
    };
    const auto first = run_once();
    const auto second = run_once();
    int differing = 0;
    for (const auto& [name, content] : first) {
        const auto it = second.find(name);
        differing += it == second.end() || it->second != content;
    }
    differing += static_cast<int>(second.size()) - static_cast<int>(first.size());
    return {differing == 0 && first.size() >= 8,
            std::to_string(first.size()) + " output files compared, " + std::to_string(differing) + " differ"};
}

Outcome performance()
{
    const DeskRun& r = desk_run();
    const face::MorphableModel m = io::get_model(io::TensorContainer::read(s(r.model)));
    const net::NetWeights w = io::get_weights(io::TensorContainer::read(s(r.weights)));
    const auto samples = io::get_samples(io::TensorContainer::read(s(r.data / "samples.dfft")));
    const RgbImage& image = samples.front().image;

    const auto t0 = Clock::now();
    const net::FeatureMap f = net::forward(w, image);
    const double extract = seconds_since(t0);

    // One iteration: descriptors at the current landmarks, the affine update, the shape refit and the visibility refresh.
    std::mt19937_64 rng(81);
    align::DescentStage stage;
    stage.RX = gaussian(136, 160 * f.dim(), rng, 1e-4);
    stage.bX = Eigen::VectorXd::Zero(136);
    stage.Rw = gaussian(6, 160 * f.dim(), rng, 1e-6);
    stage.bw = Eigen::VectorXd::Zero(6);
    const auto t1 = Clock::now();
    const align::AlignResult res =
        align::align_from_features(m, f, descent::training_box(samples.front().landmarks68), {stage}, align::AlignConfig{});
    const double iteration = seconds_since(t1);
    return {extract < 1.0 && iteration < 1.0 && res.trace.size() == 2,
            "extraction " + fmt("%.3f", extract) + " s, one align iteration " + fmt("%.3f", iteration) +
                " s (limits 1 s each)"};
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"gradient correctness", gradient_correctness},
        {"loss sanity", loss_sanity},
        {"trainability", trainability},
        {"rasterizer and visibility oracles", raster_visibility},
        {"ridge and shape-fit oracles", ridge_shape_fit},
        {"cvt properties", cvt_properties},
        {"matching self-consistency", matching_self_consistency},
        {"end-to-end synthetic descent", end_to_end},
        {"unit-norm contract", unit_norm},
        {"determinism", determinism},
        {"performance smoke", performance},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size() << " criteria passed"
              << std::endl;
    return failures == 0 ? 0 : 1;
}
