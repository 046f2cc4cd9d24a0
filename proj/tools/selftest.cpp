#include "cli.hpp"

#include "oracles.hpp"

#include "dff/align.hpp"
#include "dff/descent.hpp"
#include "dff/eval.hpp"
#include "dff/matching.hpp"
#include "dff/net.hpp"
#include "dff/renderer.hpp"
#include "dff/segmentation.hpp"
#include "dff/tensor_io.hpp"

#include <cmath>
#include <functional>
#include <iostream>
#include <random>

namespace dff::cli {

namespace {

bool check_loss_closed_forms()
{
    net::FeatureMap f{1, 1, Eigen::MatrixXd(Eigen::VectorXd::Unit(2, 0))};
    LabelMap labels(1, 1);
    labels.at(0, 0) = 0;
    net::LossLayerParams sep{Eigen::MatrixXd::Identity(2, 2)};
    net::LossLayerParams sym{Eigen::MatrixXd::Zero(2, 2)};
    sym.class_vectors.col(1).setOnes();
    return std::abs(net::angular_softmax_loss(f, labels, sep) - std::log1p(std::exp(-1.0))) < 1e-9 &&
           std::abs(net::angular_softmax_loss(f, labels, sym) - std::log(2.0)) < 1e-9;
}

bool check_ridge()
{
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd x(12, 4), y(12, 2);
    for (Eigen::Index i = 0; i < x.size(); ++i)
        x.data()[i] = n(rng);
    for (Eigen::Index i = 0; i < y.size(); ++i)
        y.data()[i] = n(rng);
    const auto s = descent::ridge_solve(x, y, 0.3);
    const Eigen::MatrixXd ref = oracle::ridge_normal_equations(x, y, 0.3);
    return (s.R.transpose() - ref.topRows(4)).norm() < 1e-10 * ref.norm() &&
           (s.b - ref.row(4).transpose()).norm() < 1e-10 * ref.norm();
}

bool check_rasterizer()
{
    std::mt19937_64 rng(11);
    const face::FaceMesh mesh = oracle::random_triangle_soup(rng, 40, 1.0);
    face::CameraParams w{10.0, 0.2, -0.3, 0.1, 16.0, 16.0};
    return render::rasterize(mesh, w, 32, 32).triangle_id == oracle::brute_force_triangle_ids(mesh, w, 32, 32);
}

bool check_matching()
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    net::FeatureMap a{8, 8, Eigen::MatrixXd(4, 64)}, b{8, 8, Eigen::MatrixXd(4, 64)};
    for (auto* m : {&a, &b}) {
        for (Eigen::Index i = 0; i < m->features.size(); ++i)
            m->features.data()[i] = n(rng);
        m->features.colwise().normalize();
    }
    match::Mask mask{8, 8, std::vector<bool>(64, true)};
    const auto dense = match::dense_match(a, mask, b, mask, 60.0);
    std::size_t k = 0;
    for (int p = 0; p < 64; ++p) {
        double angle = 0.0;
        const Eigen::Index j = oracle::brute_force_nearest(a.features.col(p), b.features, angle);
        if (angle > 60.0)
            continue;
        if (k >= dense.matches.pairs.size())
            return false;
        const auto& pr = dense.matches.pairs[k++];
        if (pr.target.y * 8 + pr.target.x != j)
            return false;
    }
    return k == dense.matches.pairs.size();
}

bool check_segmentation()
{
    const auto model = face::generate_synthetic_model(3, 400, 2, 2);
    const auto mesh = face::synthesize_shape(model, face::ShapeParams::zero(model));
    seg::CvtTrace trace;
    const auto s = seg::cvt_segment(mesh, 12, 9, &trace);
    for (std::size_t i = 1; i < trace.energy.size(); ++i)
        if (trace.energy[i] > trace.energy[i - 1])
            return false;
    return seg::check_partition(mesh, s).empty() && s == seg::cvt_segment(mesh, 12, 9);
}

bool check_gradient()
{
    net::NetConfig cfg;
    cfg.width = cfg.height = 8;
    cfg.feature_dim = 4;
    cfg.depth = 1;
    cfg.channels = {3, 4};
    net::NetWeights w = net::init_weights(cfg);
    std::vector<net::LossLayerParams> layers = {net::init_loss_layer(3, 4, 2)};
    net::TrainingExample ex;
    ex.image = RgbImage(8, 8);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : ex.image.data)
        v = u(rng);
    LabelMap labels(8, 8);
    for (int i = 0; i < 64; ++i)
        labels.data[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(i % 3);
    ex.labels = {labels};
    const std::vector<const net::TrainingExample*> batch = {&ex};
    const auto g = net::loss_and_gradients(w, layers, batch);
    double worst = 0.0;
    for (std::size_t p = 0; p < w.params.size(); ++p) {
        double& x = w.params[p].value(0, 0);
        const double x0 = x;
        x = x0 + 1e-5;
        const double lp = net::batch_loss(w, layers, batch);
        x = x0 - 1e-5;
        const double lm = net::batch_loss(w, layers, batch);
        x = x0;
        worst = std::max(worst, oracle::relative_error(g.weight_grads[p](0, 0), (lp - lm) / 2e-5));
    }
    return worst < 1e-4;
}

bool check_container()
{
    io::TensorContainer c;
    c.add(io::Tensor::from_matrix("m", Eigen::MatrixXd::Random(3, 4)));
    c.add(io::Tensor::from_text("t", "hello"));
    return io::TensorContainer::decode(c.encode()) == c;
}

bool check_eval()
{
    std::vector<eval::EvalItem> items;
    for (double nme : {3.0, 5.0, 7.0}) {
        eval::EvalItem it;
        it.truth = Eigen::Matrix2Xd::Zero(2, 4);
        it.predicted = it.truth;
        it.predicted.row(0).setConstant(nme);
        it.box = {0, 0, 1, 1};
        it.yaw_deg = (nme - 3.0) * 15.0 + 10.0;
        items.push_back(it);
    }
    const auto r = eval::evaluate(items, eval::Normalization::BoundingBox);
    return std::abs(r.mean - 5.0) < 1e-12 && std::abs(r.stddev - 2.0) < 1e-12;
}

} // namespace

bool run_selftest()
{
    const std::vector<std::pair<const char*, std::function<bool()>>> checks = {
        {"loss closed forms", check_loss_closed_forms},
        {"ridge vs normal equations", check_ridge},
        {"rasterizer vs brute force", check_rasterizer},
        {"matching vs exhaustive search", check_matching},
        {"cvt partition and energy", check_segmentation},
        {"gradient vs finite differences", check_gradient},
        {"tensor container round trip", check_container},
        {"eval bin statistics", check_eval},
    };
    bool all = true;
    for (const auto& [name, fn] : checks) {
        bool ok = false;
        try {
            ok = fn();
        } catch (const std::exception& e) {
            std::cerr << name << ": " << e.what() << "\n";
        }
        std::cout << (ok ? "PASS " : "FAIL ") << name << "\n";
        all = all && ok;
    }
    return all;
}

} // namespace dff::cli
