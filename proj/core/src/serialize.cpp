#include "dff/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dff::io {

namespace {

std::vector<std::uint32_t> to_u32(const std::vector<int>& v)
{
    return {v.begin(), v.end()};
}

std::vector<int> to_int(const std::vector<std::uint32_t>& v)
{
    return {v.begin(), v.end()};
}

Tensor matrix2x(const std::string& name, const std::vector<Eigen::Matrix2Xd>& rows)
{
    const std::uint32_t n = static_cast<std::uint32_t>(rows.size());
    const std::uint32_t len = rows.empty() ? 0 : static_cast<std::uint32_t>(rows.front().size());
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(n) * len);
    for (const auto& m : rows)
        v.insert(v.end(), m.data(), m.data() + m.size());
    return Tensor::from_f64(name, {n, len}, v);
}

std::vector<Eigen::Matrix2Xd> matrix2x(const Tensor& t)
{
    const std::vector<double> v = t.to_f64();
    std::vector<Eigen::Matrix2Xd> out;
    const std::uint32_t len = t.dims.at(1);
    for (std::uint32_t i = 0; i < t.dims.at(0); ++i)
        out.push_back(Eigen::Map<const Eigen::Matrix2Xd>(v.data() + static_cast<std::size_t>(i) * len, 2, len / 2));
    return out;
}

std::vector<std::uint32_t> split_seed(std::uint64_t s)
{
    return {static_cast<std::uint32_t>(s & 0xFFFFFFFFu), static_cast<std::uint32_t>(s >> 32)};
}

std::uint64_t join_seed(std::uint32_t lo, std::uint32_t hi)
{
    return static_cast<std::uint64_t>(lo) | (static_cast<std::uint64_t>(hi) << 32);
}

} // namespace

void put_model(TensorContainer& c, const face::MorphableModel& model)
{
    c.add(Tensor::from_vector("model.mean_shape", model.mean_shape));
    c.add(Tensor::from_matrix("model.id_basis", model.id_basis));
    c.add(Tensor::from_matrix("model.exp_basis", model.exp_basis));
    c.add(Tensor::from_vector("model.mean_albedo", model.mean_albedo));
    c.add(Tensor::from_matrix("model.alb_basis", model.alb_basis));
    c.add(Tensor::from_vector("model.id_eigen", model.id_eigen));
    c.add(Tensor::from_vector("model.exp_eigen", model.exp_eigen));
    std::vector<std::uint32_t> tri;
    for (const auto& t : model.triangles)
        tri.insert(tri.end(), t.begin(), t.end());
    c.add(Tensor::from_u32("model.triangles", {static_cast<std::uint32_t>(model.triangles.size()), 3}, tri));
    c.add(Tensor::from_u32("model.landmarks68", {static_cast<std::uint32_t>(model.landmarks68.size())},
                           to_u32(model.landmarks68)));
    c.add(Tensor::from_u32("model.landmarks160", {static_cast<std::uint32_t>(model.landmarks160.size())},
                           to_u32(model.landmarks160)));
}

face::MorphableModel get_model(const TensorContainer& c)
{
    face::MorphableModel m;
    m.mean_shape = c.get("model.mean_shape").to_vector();
    m.id_basis = c.get("model.id_basis").to_matrix();
    m.exp_basis = c.get("model.exp_basis").to_matrix();
    m.mean_albedo = c.get("model.mean_albedo").to_vector();
    m.alb_basis = c.get("model.alb_basis").to_matrix();
    m.id_eigen = c.get("model.id_eigen").to_vector();
    m.exp_eigen = c.get("model.exp_eigen").to_vector();
    const auto tri = c.get("model.triangles").to_u32();
    for (std::size_t i = 0; i + 2 < tri.size(); i += 3)
        m.triangles.push_back({static_cast<int>(tri[i]), static_cast<int>(tri[i + 1]), static_cast<int>(tri[i + 2])});
    m.landmarks68 = to_int(c.get("model.landmarks68").to_u32());
    m.landmarks160 = to_int(c.get("model.landmarks160").to_u32());
    m.validate();
    return m;
}

void put_network(TensorContainer& c, const net::NetWeights& weights, const std::vector<net::LossLayerParams>& layers)
{
    const auto& cfg = weights.config;
    std::vector<std::uint32_t> header = {static_cast<std::uint32_t>(cfg.height), static_cast<std::uint32_t>(cfg.width),
                                         static_cast<std::uint32_t>(cfg.feature_dim),
                                         static_cast<std::uint32_t>(cfg.depth)};
    const auto seed = split_seed(cfg.seed);
    header.insert(header.end(), seed.begin(), seed.end());
    for (int ch : cfg.channels)
        header.push_back(static_cast<std::uint32_t>(ch));
    c.add(Tensor::from_u32("net.config", {static_cast<std::uint32_t>(header.size())}, header));
    for (const auto& p : weights.params)
        c.add(Tensor::from_matrix("net." + p.name, p.value));
    for (std::size_t s = 0; s < layers.size(); ++s)
        c.add(Tensor::from_matrix("loss.class_vectors." + std::to_string(s), layers[s].class_vectors));
}

net::NetWeights get_weights(const TensorContainer& c)
{
    const auto h = c.get("net.config").to_u32();
    if (h.size() < 7)
        throw std::runtime_error("net.config: header too short");
    net::NetConfig cfg;
    cfg.height = static_cast<int>(h[0]);
    cfg.width = static_cast<int>(h[1]);
    cfg.feature_dim = static_cast<int>(h[2]);
    cfg.depth = static_cast<int>(h[3]);
    cfg.seed = join_seed(h[4], h[5]);
    cfg.channels.assign(h.begin() + 6, h.end());
    net::NetWeights w = net::zero_weights(cfg);
    for (auto& p : w.params) {
        const Eigen::MatrixXd m = c.get("net." + p.name).to_matrix();
        if (m.rows() != p.value.rows() || m.cols() != p.value.cols())
            throw std::runtime_error("parameter '" + p.name + "' has the wrong shape");
        p.value = m;
    }
    return w;
}

std::vector<net::LossLayerParams> get_loss_layers(const TensorContainer& c)
{
    std::vector<net::LossLayerParams> layers;
    for (std::size_t s = 0; c.contains("loss.class_vectors." + std::to_string(s)); ++s)
        layers.push_back({c.get("loss.class_vectors." + std::to_string(s)).to_matrix()});
    return layers;
}

void put_segmentations(TensorContainer& c, const std::vector<seg::Segmentation>& bank)
{
    c.add(Tensor::from_u32("seg.count", {1}, {static_cast<std::uint32_t>(bank.size())}));
    for (std::size_t i = 0; i < bank.size(); ++i) {
        const std::string p = "seg." + std::to_string(i);
        std::vector<std::uint32_t> meta = {static_cast<std::uint32_t>(bank[i].patch_count)};
        const auto seed = split_seed(bank[i].seed);
        meta.insert(meta.end(), seed.begin(), seed.end());
        c.add(Tensor::from_u32(p + ".meta", {3}, meta));
        c.add(Tensor::from_u32(p + ".patch_of", {static_cast<std::uint32_t>(bank[i].patch_of.size())}, bank[i].patch_of));
    }
}

std::vector<seg::Segmentation> get_segmentations(const TensorContainer& c)
{
    const std::uint32_t n = c.get("seg.count").to_u32().at(0);
    std::vector<seg::Segmentation> bank;
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::string p = "seg." + std::to_string(i);
        const auto meta = c.get(p + ".meta").to_u32();
        seg::Segmentation s;
        s.patch_count = static_cast<int>(meta.at(0));
        s.seed = join_seed(meta.at(1), meta.at(2));
        s.patch_of = c.get(p + ".patch_of").to_u32();
        bank.push_back(std::move(s));
    }
    return bank;
}

void put_cascade(TensorContainer& c, const std::vector<align::DescentStage>& stages, int feature_dim)
{
    c.add(Tensor::from_u32("cascade.header", {4},
                           {static_cast<std::uint32_t>(feature_dim), static_cast<std::uint32_t>(stages.size()),
                            static_cast<std::uint32_t>(align::kLandmarks68),
                            static_cast<std::uint32_t>(align::kLandmarks160)}));
    for (std::size_t k = 0; k < stages.size(); ++k) {
        const std::string s = std::to_string(k);
        c.add(Tensor::from_matrix("RX_" + s, stages[k].RX));
        c.add(Tensor::from_vector("bX_" + s, stages[k].bX));
        c.add(Tensor::from_matrix("Rw_" + s, stages[k].Rw));
        c.add(Tensor::from_vector("bw_" + s, stages[k].bw));
    }
}

std::vector<align::DescentStage> get_cascade(const TensorContainer& c)
{
    const auto h = c.get("cascade.header").to_u32();
    if (h.size() != 4 || h[2] != static_cast<std::uint32_t>(align::kLandmarks68) ||
        h[3] != static_cast<std::uint32_t>(align::kLandmarks160))
        throw std::runtime_error("cascade header does not describe the 68/160 landmark layout");
    std::vector<align::DescentStage> stages;
    for (std::uint32_t k = 0; k < h[1]; ++k) {
        const std::string s = std::to_string(k);
        align::DescentStage st{c.get("RX_" + s).to_matrix(), c.get("bX_" + s).to_vector(), c.get("Rw_" + s).to_matrix(),
                               c.get("bw_" + s).to_vector()};
        st.validate();
        if (st.feature_length() != static_cast<Eigen::Index>(h[0]) * align::kLandmarks160)
            throw std::runtime_error("cascade stage " + s + " does not match the header feature dimension");
        stages.push_back(std::move(st));
    }
    return stages;
}

void put_samples(TensorContainer& c, const std::vector<render::RenderedSample>& samples)
{
    const auto n = static_cast<std::uint32_t>(samples.size());
    c.add(Tensor::from_u32("samples.count", {1}, {n}));
    if (samples.empty())
        return;
    const auto& f = samples.front();
    const auto h = static_cast<std::uint32_t>(f.image.height), w = static_cast<std::uint32_t>(f.image.width);
    std::vector<std::uint8_t> pixels;
    std::vector<double> id, exp, alb, cam, light;
    std::vector<std::uint8_t> vis;
    std::vector<Eigen::Matrix2Xd> l68, l160;
    for (const auto& s : samples) {
        if (s.image.width != f.image.width || s.image.height != f.image.height)
            throw std::invalid_argument("put_samples: all images must share one size");
        for (double v : s.image.data)
            pixels.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
        id.insert(id.end(), s.shape.id.data(), s.shape.id.data() + s.shape.id.size());
        exp.insert(exp.end(), s.shape.exp.data(), s.shape.exp.data() + s.shape.exp.size());
        alb.insert(alb.end(), s.albedo.alb.data(), s.albedo.alb.data() + s.albedo.alb.size());
        const auto cv = s.camera.to_vector();
        cam.insert(cam.end(), cv.data(), cv.data() + 6);
        light.insert(light.end(), s.light.data(), s.light.data() + 3);
        for (bool b : s.visibility160)
            vis.push_back(b ? 1 : 0);
        l68.push_back(s.landmarks68);
        l160.push_back(s.landmarks160);
    }
    c.add(Tensor::from_u8("samples.images", {n, h, w, 3}, pixels));
    c.add(Tensor::from_f64("samples.shape_id", {n, static_cast<std::uint32_t>(f.shape.id.size())}, id));
    c.add(Tensor::from_f64("samples.shape_exp", {n, static_cast<std::uint32_t>(f.shape.exp.size())}, exp));
    c.add(Tensor::from_f64("samples.albedo", {n, static_cast<std::uint32_t>(f.albedo.alb.size())}, alb));
    c.add(Tensor::from_f64("samples.camera", {n, 6}, cam));
    c.add(Tensor::from_f64("samples.light", {n, 3}, light));
    c.add(matrix2x("samples.landmarks68", l68));
    c.add(matrix2x("samples.landmarks160", l160));
    c.add(Tensor::from_u8("samples.visibility160", {n, static_cast<std::uint32_t>(f.visibility160.size())}, vis));
}

std::vector<render::RenderedSample> get_samples(const TensorContainer& c)
{
    const std::uint32_t n = c.get("samples.count").to_u32().at(0);
    std::vector<render::RenderedSample> out(n);
    if (n == 0)
        return out;
    const Tensor& images = c.get("samples.images");
    const int h = static_cast<int>(images.dims.at(1)), w = static_cast<int>(images.dims.at(2));
    const Eigen::MatrixXd id = c.get("samples.shape_id").to_matrix();
    const Eigen::MatrixXd exp = c.get("samples.shape_exp").to_matrix();
    const Eigen::MatrixXd alb = c.get("samples.albedo").to_matrix();
    const Eigen::MatrixXd cam = c.get("samples.camera").to_matrix();
    const Eigen::MatrixXd light = c.get("samples.light").to_matrix();
    const auto l68 = matrix2x(c.get("samples.landmarks68"));
    const auto l160 = matrix2x(c.get("samples.landmarks160"));
    const Tensor& vis = c.get("samples.visibility160");
    const std::size_t vis_len = vis.dims.at(1);
    const std::size_t px = static_cast<std::size_t>(h) * w * 3;
    for (std::uint32_t i = 0; i < n; ++i) {
        auto& s = out[i];
        s.image = RgbImage(w, h);
        for (std::size_t k = 0; k < px; ++k)
            s.image.data[k] = static_cast<double>(images.bytes[i * px + k]) / 255.0;
        s.shape.id = id.row(i).transpose();
        s.shape.exp = exp.row(i).transpose();
        s.albedo.alb = alb.row(i).transpose();
        s.camera = face::CameraParams::from_vector(cam.row(i).transpose());
        s.light = light.row(i).transpose();
        s.landmarks68 = l68[i];
        s.landmarks160 = l160[i];
        for (std::size_t k = 0; k < vis_len; ++k)
            s.visibility160.push_back(vis.bytes[i * vis_len + k] != 0);
    }
    return out;
}

void put_provenance(TensorContainer& c, const std::string& text)
{
    c.add(Tensor::from_text(kProvenanceTensor, text));
}

} // namespace dff::io
