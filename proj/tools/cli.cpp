#include "cli.hpp"

#include "dff/align.hpp"
#include "dff/descent.hpp"
#include "dff/eval.hpp"
#include "dff/image_io.hpp"
#include "dff/matching.hpp"
#include "dff/net.hpp"
#include "dff/renderer.hpp"
#include "dff/run_config.hpp"
#include "dff/segmentation.hpp"
#include "dff/serialize.hpp"
#include "dff/tensor_io.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

namespace dff::cli {

namespace {

namespace fs = std::filesystem;

struct Context
{
    io::RunConfig config;
    std::string command;
    std::map<std::string, std::string> inputs; // non-config arguments, echoed into provenance

    std::string provenance() const
    {
        std::string out = "command=" + command + "\n";
        for (const auto& [k, v] : inputs)
            out += "input." + k + "=" + v + "\n";
        return out + config.to_text();
    }

    std::string provenance_header() const
    {
        std::string out;
        std::istringstream in(provenance());
        std::string line;
        while (std::getline(in, line))
            out += "# " + line + "\n";
        return out;
    }
};

std::string format(const char* fmt, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

std::string join(const Eigen::VectorXd& v)
{
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out += (i ? " " : "") + format("%.17g", v[i]);
    return out;
}

face::MorphableModel load_model(const std::string& path)
{
    return io::get_model(io::TensorContainer::read(path));
}

net::NetConfig net_config(const io::RunConfig& cfg, int width, int height)
{
    net::NetConfig nc;
    nc.width = width;
    nc.height = height;
    nc.feature_dim = cfg.get_int("feature_dim");
    nc.depth = cfg.get_int("net_depth");
    nc.channels = cfg.get_int_list("net_channels");
    nc.seed = cfg.get_u64("seed");
    nc.validate();
    return nc;
}

align::AlignConfig align_config(const io::RunConfig& cfg)
{
    align::AlignConfig ac;
    ac.omega_lan = cfg.get_double("omega_lan");
    ac.omega_reg = cfg.get_double("omega_reg");
    ac.iterations = cfg.get_int("cascade_stages");
    ac.visibility_resolution = cfg.get_int("visibility_resolution");
    ac.validate();
    return ac;
}

descent::RegressionConfig regression_config(const io::RunConfig& cfg)
{
    descent::RegressionConfig rc;
    if (!cfg.is_auto("lambda1"))
        rc.lambda1 = cfg.get_double("lambda1");
    if (!cfg.is_auto("lambda2"))
        rc.lambda2 = cfg.get_double("lambda2");
    rc.lambda_per_sample = cfg.get_double("lambda_per_sample");
    rc.stage_count = cfg.get_int("cascade_stages");
    return rc;
}

Box parse_box(const std::string& text)
{
    std::vector<double> v;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ','))
        v.push_back(std::stod(item));
    if (v.size() != 4)
        throw CLI::ValidationError("--box", "expected x,y,w,h");
    return {v[0], v[1], v[2], v[3]};
}

void draw_dot(RgbImage& img, double x, double y, const Eigen::Vector3d& color)
{
    const int cx = static_cast<int>(std::lround(x)), cy = static_cast<int>(std::lround(y));
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
            const int px = cx + dx, py = cy + dy;
            if (px < 0 || py < 0 || px >= img.width || py >= img.height)
                continue;
            for (int c = 0; c < 3; ++c)
                img.at(px, py, c) = color[c];
        }
}

/// Image scaled up by `factor` (nearest neighbour) with landmarks drawn; green visible, red hidden.
RgbImage landmark_overlay(const RgbImage& image, const Eigen::Matrix2Xd& points, const std::vector<bool>& visible,
                          int factor)
{
    RgbImage out(image.width * factor, image.height * factor);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            for (int c = 0; c < 3; ++c)
                out.at(x, y, c) = image.at(x / factor, y / factor, c);
    for (Eigen::Index i = 0; i < points.cols(); ++i) {
        const Eigen::Vector3d color = visible[static_cast<std::size_t>(i)] ? Eigen::Vector3d(0, 1, 0) : Eigen::Vector3d(1, 0, 0);
        draw_dot(out, (points(0, i) + 0.5) * factor - 0.5, (points(1, i) + 0.5) * factor - 0.5, color);
    }
    return out;
}

std::vector<net::TrainingExample> training_examples(const face::MorphableModel& model,
                                                    const std::vector<render::RenderedSample>& samples,
                                                    const std::vector<seg::Segmentation>& bank)
{
    std::vector<net::TrainingExample> out;
    for (const auto& s : samples) {
        net::TrainingExample ex;
        ex.image = s.image;
        for (const auto& seg : bank)
            ex.labels.push_back(render::project_patch_labels(model, s.shape, s.camera, seg, s.image.width, s.image.height));
        out.push_back(std::move(ex));
    }
    return out;
}

double yaw_degrees(const face::CameraParams& w) { return w.beta * 180.0 / std::numbers::pi; }

// ---- subcommands -------------------------------------------------------------

void cmd_gen_model(const Context& ctx)
{
    const auto& c = ctx.config;
    const face::MorphableModel model = face::generate_synthetic_model(c.get_u64("seed"), c.get_int("model_vertices"),
                                                                      c.get_int("id_modes"), c.get_int("exp_modes"));
    io::TensorContainer out;
    io::put_provenance(out, ctx.provenance());
    io::put_model(out, model);
    out.write(c.get("output_path"));
    std::cout << "model: " << model.vertex_count() << " vertices, " << model.triangles.size() << " triangles\n";
}

void cmd_gen_data(const Context& ctx, int count)
{
    const auto& c = ctx.config;
    const face::MorphableModel model = load_model(c.get("model_path"));
    render::DatasetConfig dc;
    dc.width = c.get_int("image_width");
    dc.height = c.get_int("image_height");
    const auto samples = render::generate_dataset(model, count, c.get_u64("seed"), dc);

    const fs::path dir = c.get("output_path");
    fs::create_directories(dir);
    std::string manifest = ctx.provenance_header() + "# index file yaw_deg pitch_deg roll_deg\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "img_%04zu.png", i);
        io::write_png((dir / name).string(), samples[i].image);
        const auto& w = samples[i].camera;
        manifest += std::to_string(i) + " " + name + " " + format("%.6f", yaw_degrees(w)) + " " +
                    format("%.6f", w.alpha * 180.0 / std::numbers::pi) + " " +
                    format("%.6f", w.gamma * 180.0 / std::numbers::pi) + "\n";
    }
    io::write_text_file((dir / "manifest.txt").string(), manifest);
    io::TensorContainer out;
    io::put_provenance(out, ctx.provenance());
    io::put_samples(out, samples);
    out.write((dir / "samples.dfft").string());
    std::cout << "wrote " << samples.size() << " samples to " << dir.string() << "\n";
}

void cmd_segment(const Context& ctx)
{
    const auto& c = ctx.config;
    const face::MorphableModel model = load_model(c.get("model_path"));
    const face::FaceMesh mesh = face::synthesize_shape(model, face::ShapeParams::zero(model));
    const auto bank = seg::generate_segmentation_bank(mesh, c.get_int("segmentation_count"), c.get_int("patch_count"),
                                                      c.get_u64("seed"));
    io::TensorContainer out;
    io::put_provenance(out, ctx.provenance());
    io::put_segmentations(out, bank);
    out.write(c.get("output_path"));
    std::cout << "wrote " << bank.size() << " segmentations\n";
}

void cmd_train(const Context& ctx, const std::string& log_path)
{
    const auto& c = ctx.config;
    const face::MorphableModel model = load_model(c.get("model_path"));
    const auto samples = io::get_samples(io::TensorContainer::read(c.get("data_path")));
    const auto bank = io::get_segmentations(io::TensorContainer::read(c.get("segmentation_path")));
    if (samples.empty())
        throw std::runtime_error("train-dff: dataset is empty");
    const auto examples = training_examples(model, samples, bank);
    std::vector<int> patch_counts;
    for (const auto& s : bank)
        patch_counts.push_back(s.patch_count);

    const net::NetConfig nc = net_config(c, samples.front().image.width, samples.front().image.height);
    net::OptimConfig oc;
    oc.learning_rate = c.get_double("learning_rate");
    oc.momentum = c.get_double("momentum");
    oc.batch_size = c.get_int("batch_size");
    oc.seed = c.get_u64("seed");
    const net::TrainResult result = net::train(nc, examples, patch_counts, c.get_int("epochs"), oc);

    io::TensorContainer out;
    io::put_provenance(out, ctx.provenance());
    io::put_network(out, result.weights, result.layers);
    out.write(c.get("output_path"));

    std::string log = ctx.provenance_header() + "# epoch loss accuracy\n";
    for (const auto& e : result.log)
        log += std::to_string(e.epoch) + " " + format("%.9f", e.loss) + " " + format("%.6f", e.accuracy) + "\n";
    io::write_text_file(log_path.empty() ? c.get("output_path") + ".log.txt" : log_path, log);
    std::cout << log.substr(log.find("# epoch loss"));
}

void cmd_extract(const Context& ctx, const std::string& image_path)
{
    const auto& c = ctx.config;
    const net::NetWeights weights = io::get_weights(io::TensorContainer::read(c.get("weights_path")));
    const net::FeatureMap fmap = net::forward(weights, io::read_png(image_path));
    io::TensorContainer out;
    io::put_provenance(out, ctx.provenance());
    const auto* d = fmap.features.data();
    out.add(io::Tensor::from_f64("features",
                                 {static_cast<std::uint32_t>(fmap.height), static_cast<std::uint32_t>(fmap.width),
                                  static_cast<std::uint32_t>(fmap.dim())},
                                 std::vector<double>(d, d + fmap.features.size())));
    out.write(c.get("output_path"));
}

void cmd_match(const Context& ctx, const std::string& source_path, const std::string& target_path,
               const std::string& points_path, double threshold, const std::string& vis_path)
{
    const auto& c = ctx.config;
    const net::NetWeights weights = io::get_weights(io::TensorContainer::read(c.get("weights_path")));
    const RgbImage src = io::read_png(source_path);
    const RgbImage tgt = io::read_png(target_path);
    const net::FeatureMap fs_ = net::forward(weights, src);
    const net::FeatureMap ft = net::forward(weights, tgt);
    const match::Mask tmask = match::face_mask(tgt);

    match::MatchSet set;
    if (!points_path.empty()) {
        std::vector<match::Pixel> points;
        std::istringstream in(io::read_text_file(points_path));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#')
                continue;
            std::istringstream ls(line);
            match::Pixel p;
            if (!(ls >> p.x >> p.y))
                throw std::runtime_error("match: malformed point line '" + line + "'");
            points.push_back(p);
        }
        set = match::sparse_match(fs_, points, ft, tmask, threshold > 0 ? threshold : match::kSparseThresholdDeg);
    } else {
        const match::DenseMatch dense = match::dense_match(fs_, match::face_mask(src), ft, tmask,
                                                           threshold > 0 ? threshold : match::kDenseThresholdDeg);
        set = dense.matches;
        if (!vis_path.empty())
            io::write_png(vis_path, match::correspondence_visualization(dense, tmask));
    }
    std::string text = ctx.provenance_header() + "# threshold_deg=" + format("%.6f", set.threshold_deg) +
                       "\n# sx sy tx ty angle_deg\n";
    for (const auto& p : set.pairs)
        text += std::to_string(p.source.x) + " " + std::to_string(p.source.y) + " " + std::to_string(p.target.x) + " " +
                std::to_string(p.target.y) + " " + format("%.6f", p.angle_deg) + "\n";
    io::write_text_file(c.get("output_path"), text);
    std::cout << set.pairs.size() << " matches\n";
}

void cmd_learn_cascade(const Context& ctx)
{
    const auto& c = ctx.config;
    const face::MorphableModel model = load_model(c.get("model_path"));
    const auto samples = io::get_samples(io::TensorContainer::read(c.get("data_path")));
    const net::NetWeights weights = io::get_weights(io::TensorContainer::read(c.get("weights_path")));
    const descent::CascadeResult result =
        descent::learn_cascade(model, samples, weights, align_config(c), regression_config(c));

    io::TensorContainer out;
    io::put_provenance(out, ctx.provenance());
    io::put_cascade(out, result.stages, weights.config.feature_dim);
    out.write(c.get("output_path"));

    for (std::size_t k = 0; k < result.x_trace.size(); ++k) {
        double sum = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i)
            sum += eval::nme_bbox(align::deinterleave(result.x_trace[k][i]), samples[i].landmarks68, {},
                                  render::landmark_box(samples[i].landmarks68, 0.0));
        std::cout << "stage " << k << " training NME " << format("%.6f", sum / static_cast<double>(samples.size()))
                  << "\n";
    }
}

void cmd_align(const Context& ctx, const std::string& image_path, const Box& box, const std::string& overlay_path)
{
    const auto& c = ctx.config;
    const face::MorphableModel model = load_model(c.get("model_path"));
    const net::NetWeights weights = io::get_weights(io::TensorContainer::read(c.get("weights_path")));
    const auto stages = io::get_cascade(io::TensorContainer::read(c.get("cascade_path")));
    const RgbImage image = io::read_png(image_path);
    const align::AlignConfig ac = align_config(c);
    const align::AlignResult r = align::align(model, image, box, weights, stages, ac);
    const auto visible = align::vertex_visibility(model, r.state, ac, model.landmarks68, image.width, image.height);
    const Eigen::Matrix2Xd pts = align::deinterleave(r.state.X);

    std::string text = ctx.provenance_header() + "# x y visible\n";
    for (Eigen::Index i = 0; i < pts.cols(); ++i)
        text += format("%.17g", pts(0, i)) + " " + format("%.17g", pts(1, i)) + " " +
                (visible[static_cast<std::size_t>(i)] ? "1" : "0") + "\n";
    text += "p_id " + join(r.state.p.id) + "\n";
    text += "p_exp " + join(r.state.p.exp) + "\n";
    text += "w " + join(r.state.w.to_vector()) + "\n";
    io::write_text_file(c.get("output_path"), text);

    io::TensorContainer params;
    io::put_provenance(params, ctx.provenance());
    params.add(io::Tensor::from_vector("p_id", r.state.p.id));
    params.add(io::Tensor::from_vector("p_exp", r.state.p.exp));
    params.add(io::Tensor::from_vector("w", r.state.w.to_vector()));
    params.add(io::Tensor::from_matrix("landmarks68", pts));
    params.write(c.get("output_path") + ".dfft");

    const std::string overlay = overlay_path.empty() ? c.get("output_path") + ".png" : overlay_path;
    io::write_png(overlay, landmark_overlay(image, pts, visible, 4));
}

void cmd_eval(const Context& ctx, const std::string& mode)
{
    const auto& c = ctx.config;
    const face::MorphableModel model = load_model(c.get("model_path"));
    const auto samples = io::get_samples(io::TensorContainer::read(c.get("data_path")));
    const net::NetWeights weights = io::get_weights(io::TensorContainer::read(c.get("weights_path")));
    const auto stages = io::get_cascade(io::TensorContainer::read(c.get("cascade_path")));
    const align::AlignConfig ac = align_config(c);

    std::vector<eval::EvalItem> items;
    for (const auto& s : samples) {
        const align::AlignResult r =
            align::align(model, s.image, descent::training_box(s.landmarks68), weights, stages, ac);
        eval::EvalItem it;
        it.predicted = align::deinterleave(r.state.X);
        it.truth = s.landmarks68;
        it.box = render::landmark_box(s.landmarks68, 0.0);
        it.yaw_deg = yaw_degrees(s.camera);
        items.push_back(std::move(it));
    }
    const auto report = eval::evaluate(items, mode == "interpupil" ? eval::Normalization::InterPupil
                                                                   : eval::Normalization::BoundingBox);
    const std::string text = ctx.provenance_header() + "# normalization=" + mode + "\n" + eval::format_report(report);
    io::write_text_file(c.get("output_path"), text);
    std::cout << eval::format_report(report);
}

} // namespace

int cli_dispatch(const std::vector<std::string>& args)
{
    CLI::App app{"Dense face feature pipeline: synthetic data, feature learning, matching and alignment", "dff"};
    app.require_subcommand(1);

    Context ctx;
    std::string config_path;
    std::map<std::string, std::string> overrides;

    const auto config_flag = [&](CLI::App* sub, const std::string& flag, const std::string& key,
                                 const std::string& help, bool required = false) {
        auto* opt = sub->add_option_function<std::string>(
            flag, [&overrides, key](const std::string& v) { overrides[key] = v; }, help);
        if (required)
            opt->required();
        return opt;
    };
    const auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key=value run configuration file");
        return sub;
    };

    int count = 0;
    std::string image_path, source_path, target_path, points_path, vis_path, overlay_path, log_path, box_text;
    std::string mode = "bbox";
    double threshold = 0.0;

    auto* gen_model = common(app.add_subcommand("gen-model", "generate a synthetic morphable model"));
    config_flag(gen_model, "--seed", "seed", "random seed", true);
    config_flag(gen_model, "--out", "output_path", "output model container", true);
    config_flag(gen_model, "--vertices", "model_vertices", "minimum vertex count");
    config_flag(gen_model, "--id-modes", "id_modes", "identity basis size");
    config_flag(gen_model, "--exp-modes", "exp_modes", "expression basis size");

    auto* gen_data = common(app.add_subcommand("gen-data", "render a synthetic dataset"));
    config_flag(gen_data, "--seed", "seed", "random seed", true);
    config_flag(gen_data, "--model", "model_path", "model container", true);
    config_flag(gen_data, "--out", "output_path", "output directory", true);
    gen_data->add_option("--count", count, "number of samples")->required()->check(CLI::PositiveNumber);
    config_flag(gen_data, "--width", "image_width", "image width");
    config_flag(gen_data, "--height", "image_height", "image height");

    auto* segment = common(app.add_subcommand("segment", "CVT segmentation bank of the mean face"));
    config_flag(segment, "--seed", "seed", "random seed", true);
    config_flag(segment, "--model", "model_path", "model container", true);
    config_flag(segment, "--out", "output_path", "output container", true);
    config_flag(segment, "--count", "segmentation_count", "number of segmentations");
    config_flag(segment, "--patches", "patch_count", "patches per segmentation");

    auto* train = common(app.add_subcommand("train-dff", "train the feature network"));
    config_flag(train, "--seed", "seed", "random seed", true);
    config_flag(train, "--model", "model_path", "model container", true);
    config_flag(train, "--data", "data_path", "samples container", true);
    config_flag(train, "--segments", "segmentation_path", "segmentation container", true);
    config_flag(train, "--out", "output_path", "output weights container", true);
    config_flag(train, "--epochs", "epochs", "training epochs");
    config_flag(train, "--lr", "learning_rate", "learning rate");
    config_flag(train, "--momentum", "momentum", "momentum");
    config_flag(train, "--batch", "batch_size", "batch size");
    config_flag(train, "--feature-dim", "feature_dim", "descriptor dimension");
    train->add_option("--log", log_path, "training log path (default <out>.log.txt)");

    auto* extract = common(app.add_subcommand("extract", "per-pixel descriptors of one image"));
    config_flag(extract, "--weights", "weights_path", "weights container", true);
    config_flag(extract, "--out", "output_path", "output features container", true);
    extract->add_option("--image", image_path, "input PNG")->required();

    auto* match = common(app.add_subcommand("match", "sparse or dense descriptor matching"));
    config_flag(match, "--weights", "weights_path", "weights container", true);
    config_flag(match, "--out", "output_path", "output matches text", true);
    match->add_option("--source", source_path, "source PNG")->required();
    match->add_option("--target", target_path, "target PNG")->required();
    match->add_option("--points", points_path, "text file of 'x y' source points (sparse mode)");
    match->add_option("--threshold", threshold, "angle threshold in degrees (30 sparse, 12 dense)");
    match->add_option("--vis", vis_path, "dense correspondence visualization PNG");

    auto* learn = common(app.add_subcommand("learn-cascade", "learn the descent stages"));
    config_flag(learn, "--model", "model_path", "model container", true);
    config_flag(learn, "--data", "data_path", "samples container", true);
    config_flag(learn, "--weights", "weights_path", "weights container", true);
    config_flag(learn, "--out", "output_path", "output cascade container", true);
    config_flag(learn, "--stages", "cascade_stages", "number of stages");

    auto* align_cmd = common(app.add_subcommand("align", "align one image from a face box"));
    config_flag(align_cmd, "--model", "model_path", "model container", true);
    config_flag(align_cmd, "--weights", "weights_path", "weights container", true);
    config_flag(align_cmd, "--cascade", "cascade_path", "cascade container", true);
    config_flag(align_cmd, "--out", "output_path", "landmarks text (default landmarks.txt)");
    align_cmd->add_option("--image", image_path, "input PNG")->required();
    align_cmd->add_option("--box", box_text, "face box x,y,w,h")->required();
    align_cmd->add_option("--overlay", overlay_path, "overlay PNG (default <out>.png)");

    auto* eval_cmd = common(app.add_subcommand("eval", "align a dataset and report NME"));
    config_flag(eval_cmd, "--model", "model_path", "model container", true);
    config_flag(eval_cmd, "--data", "data_path", "samples container", true);
    config_flag(eval_cmd, "--weights", "weights_path", "weights container", true);
    config_flag(eval_cmd, "--cascade", "cascade_path", "cascade container", true);
    config_flag(eval_cmd, "--out", "output_path", "report text", true);
    eval_cmd->add_option("--mode", mode, "bbox or interpupil")->check(CLI::IsMember({"bbox", "interpupil"}));

    auto* selftest = app.add_subcommand("selftest", "run the built-in oracle checks");

    std::vector<std::string> argv_store = {"dff"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_store)
        argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    CLI::App* sub = app.get_subcommands().front();
    ctx.command = sub->get_name();
    if (sub == selftest)
        return run_selftest() ? kExitOk : kExitFailure;

    try {
        if (!config_path.empty())
            ctx.config = io::RunConfig::load(config_path);
        if (sub == align_cmd && !overrides.count("output_path"))
            overrides["output_path"] = "landmarks.txt";
        for (const auto& [k, v] : overrides)
            ctx.config.set(k, v);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (sub == gen_model)
            cmd_gen_model(ctx);
        else if (sub == gen_data) {
            ctx.inputs["count"] = std::to_string(count);
            cmd_gen_data(ctx, count);
        } else if (sub == segment)
            cmd_segment(ctx);
        else if (sub == train)
            cmd_train(ctx, log_path);
        else if (sub == extract) {
            ctx.inputs["image"] = image_path;
            cmd_extract(ctx, image_path);
        } else if (sub == match) {
            ctx.inputs["source"] = source_path;
            ctx.inputs["target"] = target_path;
            if (!points_path.empty())
                ctx.inputs["points"] = points_path;
            cmd_match(ctx, source_path, target_path, points_path, threshold, vis_path);
        } else if (sub == learn)
            cmd_learn_cascade(ctx);
        else if (sub == align_cmd) {
            Box box;
            try {
                box = parse_box(box_text);
            } catch (const std::exception&) {
                std::cerr << "error: --box expects x,y,w,h\n";
                return kExitUsage;
            }
            ctx.inputs["image"] = image_path;
            ctx.inputs["box"] = box_text;
            cmd_align(ctx, image_path, box, overlay_path);
        } else if (sub == eval_cmd) {
            ctx.inputs["mode"] = mode;
            cmd_eval(ctx, mode);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << ctx.command << ": " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitOk;
}

} // namespace dff::cli
