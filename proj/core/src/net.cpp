#include "dff/net.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace dff::net {

namespace {

enum class Kind
{
    Conv3,
    Down,
    Up,
    Head
};

struct LayerSpec
{
    std::string name;
    Kind kind;
    int in;
    int out;
};

std::vector<LayerSpec> layer_specs(const NetConfig& c)
{
    std::vector<LayerSpec> specs;
    specs.push_back({"enc0", Kind::Conv3, 3, c.channels[0]});
    for (int l = 1; l <= c.depth; ++l) {
        specs.push_back({"down" + std::to_string(l), Kind::Down, c.channels[l - 1], c.channels[l]});
        specs.push_back({"enc" + std::to_string(l), Kind::Conv3, c.channels[l], c.channels[l]});
    }
    for (int l = c.depth; l >= 1; --l) {
        specs.push_back({"up" + std::to_string(l), Kind::Up, c.channels[l], c.channels[l - 1]});
        specs.push_back({"dec" + std::to_string(l - 1), Kind::Conv3, 2 * c.channels[l - 1], c.channels[l - 1]});
    }
    specs.push_back({"head", Kind::Head, c.channels[0], c.feature_dim});
    return specs;
}

std::pair<Eigen::Index, Eigen::Index> weight_shape(const LayerSpec& s)
{
    switch (s.kind) {
    case Kind::Conv3: return {s.out, s.in * 9};
    case Kind::Down: return {s.out, s.in * 4};
    case Kind::Up: return {s.out * 4, s.in};
    case Kind::Head: return {s.out, s.in};
    }
    return {0, 0};
}

int fan_in(const LayerSpec& s)
{
    switch (s.kind) {
    case Kind::Conv3: return s.in * 9;
    case Kind::Down: return s.in * 4;
    case Kind::Up: return s.in; // each output pixel receives one tap per input channel
    case Kind::Head: return s.in;
    }
    return 1;
}

// Feature tensors are C x (h * w), column y * w + x.
struct Tensor
{
    Eigen::MatrixXd data;
    int h = 0;
    int w = 0;
};

Eigen::MatrixXd im2col3(const Tensor& in)
{
    const int c = static_cast<int>(in.data.rows());
    Eigen::MatrixXd cols = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(c) * 9, static_cast<Eigen::Index>(in.h) * in.w);
    for (int y = 0; y < in.h; ++y) {
        for (int x = 0; x < in.w; ++x) {
            const Eigen::Index p = static_cast<Eigen::Index>(y) * in.w + x;
            for (int ky = 0; ky < 3; ++ky) {
                const int sy = y + ky - 1;
                if (sy < 0 || sy >= in.h)
                    continue;
                for (int kx = 0; kx < 3; ++kx) {
                    const int sx = x + kx - 1;
                    if (sx < 0 || sx >= in.w)
                        continue;
                    const Eigen::Index q = static_cast<Eigen::Index>(sy) * in.w + sx;
                    const int k = ky * 3 + kx;
                    for (int ci = 0; ci < c; ++ci)
                        cols(ci * 9 + k, p) = in.data(ci, q);
                }
            }
        }
    }
    return cols;
}

Eigen::MatrixXd col2im3(const Eigen::MatrixXd& cols, int c, int h, int w)
{
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(c, static_cast<Eigen::Index>(h) * w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Eigen::Index p = static_cast<Eigen::Index>(y) * w + x;
            for (int ky = 0; ky < 3; ++ky) {
                const int sy = y + ky - 1;
                if (sy < 0 || sy >= h)
                    continue;
                for (int kx = 0; kx < 3; ++kx) {
                    const int sx = x + kx - 1;
                    if (sx < 0 || sx >= w)
                        continue;
                    const Eigen::Index q = static_cast<Eigen::Index>(sy) * w + sx;
                    const int k = ky * 3 + kx;
                    for (int ci = 0; ci < c; ++ci)
                        out(ci, q) += cols(ci * 9 + k, p);
                }
            }
        }
    }
    return out;
}

// 2x2 blocks of the input gathered per output pixel (stride 2).
Eigen::MatrixXd gather2(const Tensor& in)
{
    const int c = static_cast<int>(in.data.rows());
    const int oh = in.h / 2, ow = in.w / 2;
    Eigen::MatrixXd cols(static_cast<Eigen::Index>(c) * 4, static_cast<Eigen::Index>(oh) * ow);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x)
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    const Eigen::Index q = static_cast<Eigen::Index>(2 * y + dy) * in.w + 2 * x + dx;
                    for (int ci = 0; ci < c; ++ci)
                        cols(ci * 4 + dy * 2 + dx, static_cast<Eigen::Index>(y) * ow + x) = in.data(ci, q);
                }
    return cols;
}

Eigen::MatrixXd scatter2(const Eigen::MatrixXd& cols, int c, int h, int w)
{
    const int oh = h / 2, ow = w / 2;
    Eigen::MatrixXd out(c, static_cast<Eigen::Index>(h) * w);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x)
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    const Eigen::Index q = static_cast<Eigen::Index>(2 * y + dy) * w + 2 * x + dx;
                    for (int ci = 0; ci < c; ++ci)
                        out(ci, q) = cols(ci * 4 + dy * 2 + dx, static_cast<Eigen::Index>(y) * ow + x);
                }
    return out;
}

// Transposed-conv layout: rows co * 4 + tap, one column per coarse pixel.
Eigen::MatrixXd expand_up(const Eigen::MatrixXd& taps, int c_out, int h, int w)
{
    Eigen::MatrixXd out(c_out, static_cast<Eigen::Index>(4) * h * w);
    const int fw = 2 * w;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    const Eigen::Index q = static_cast<Eigen::Index>(2 * y + dy) * fw + 2 * x + dx;
                    for (int co = 0; co < c_out; ++co)
                        out(co, q) = taps(co * 4 + dy * 2 + dx, static_cast<Eigen::Index>(y) * w + x);
                }
    return out;
}

Eigen::MatrixXd collapse_up(const Eigen::MatrixXd& fine, int c_out, int h, int w)
{
    Eigen::MatrixXd taps(static_cast<Eigen::Index>(c_out) * 4, static_cast<Eigen::Index>(h) * w);
    const int fw = 2 * w;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    const Eigen::Index q = static_cast<Eigen::Index>(2 * y + dy) * fw + 2 * x + dx;
                    for (int co = 0; co < c_out; ++co)
                        taps(co * 4 + dy * 2 + dx, static_cast<Eigen::Index>(y) * w + x) = fine(co, q);
                }
    return taps;
}

void elu_inplace(Eigen::MatrixXd& m)
{
    m = m.unaryExpr([](double z) { return z > 0.0 ? z : std::expm1(z); });
}

// dL/dz from dL/d(elu(z)), using the stored output.
Eigen::MatrixXd elu_backward(const Eigen::MatrixXd& grad_out, const Eigen::MatrixXd& out)
{
    return grad_out.binaryExpr(out, [](double g, double o) { return o > 0.0 ? g : g * (o + 1.0); });
}

struct LayerIO
{
    Tensor input;
    Tensor output;
};

struct ForwardPass
{
    std::vector<LayerSpec> specs;
    std::vector<LayerIO> io;       // parallel to specs
    Eigen::MatrixXd pre_norm;      // head output, D x HW
    Eigen::VectorXd norms;
    FeatureMap fmap;
};

Tensor apply_layer(const LayerSpec& spec, const Eigen::MatrixXd& weight, const Eigen::MatrixXd& bias, const Tensor& in)
{
    Tensor out;
    switch (spec.kind) {
    case Kind::Conv3:
        out.h = in.h;
        out.w = in.w;
        out.data = weight * im2col3(in);
        break;
    case Kind::Down:
        out.h = in.h / 2;
        out.w = in.w / 2;
        out.data = weight * gather2(in);
        break;
    case Kind::Up:
        out.h = in.h * 2;
        out.w = in.w * 2;
        out.data = expand_up(weight * in.data, spec.out, in.h, in.w);
        break;
    case Kind::Head:
        out.h = in.h;
        out.w = in.w;
        out.data = weight * in.data;
        break;
    }
    out.data.colwise() += bias.col(0);
    if (spec.kind != Kind::Head)
        elu_inplace(out.data);
    return out;
}

// Accumulates weight/bias gradients and returns the gradient with respect to the layer input.
Eigen::MatrixXd backprop_layer(const LayerSpec& spec, const Eigen::MatrixXd& weight, const LayerIO& io,
                               const Eigen::MatrixXd& grad_out, Eigen::MatrixXd& grad_w, Eigen::MatrixXd& grad_b)
{
    const Eigen::MatrixXd g = spec.kind == Kind::Head ? grad_out : elu_backward(grad_out, io.output.data);
    grad_b.col(0) += g.rowwise().sum();
    switch (spec.kind) {
    case Kind::Conv3: {
        const Eigen::MatrixXd cols = im2col3(io.input);
        grad_w.noalias() += g * cols.transpose();
        return col2im3(weight.transpose() * g, spec.in, io.input.h, io.input.w);
    }
    case Kind::Down: {
        const Eigen::MatrixXd cols = gather2(io.input);
        grad_w.noalias() += g * cols.transpose();
        return scatter2(weight.transpose() * g, spec.in, io.input.h, io.input.w);
    }
    case Kind::Up: {
        const Eigen::MatrixXd taps = collapse_up(g, spec.out, io.input.h, io.input.w);
        grad_w.noalias() += taps * io.input.data.transpose();
        return weight.transpose() * taps;
    }
    case Kind::Head:
        grad_w.noalias() += g * io.input.data.transpose();
        return weight.transpose() * g;
    }
    return {};
}

Tensor image_tensor(const RgbImage& image)
{
    Tensor t;
    t.h = image.height;
    t.w = image.width;
    t.data.resize(3, static_cast<Eigen::Index>(image.height) * image.width);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            for (int c = 0; c < 3; ++c)
                t.data(c, static_cast<Eigen::Index>(y) * image.width + x) = image.at(x, y, c) - 0.5;
    return t;
}

ForwardPass run_forward(const NetWeights& weights, const RgbImage& image)
{
    const NetConfig& cfg = weights.config;
    if (image.width != cfg.width || image.height != cfg.height)
        throw std::invalid_argument("forward: image size " + std::to_string(image.width) + "x" +
                                    std::to_string(image.height) + " does not match the network input size");
    ForwardPass fp;
    fp.specs = layer_specs(cfg);
    fp.io.resize(fp.specs.size());
    const auto& P = weights.params;

    std::size_t li = 0;
    const auto run = [&](const Tensor& in) -> const Tensor& {
        fp.io[li].input = in;
        fp.io[li].output = apply_layer(fp.specs[li], P[2 * li].value, P[2 * li + 1].value, in);
        return fp.io[li++].output;
    };

    std::vector<const Tensor*> skip(cfg.depth + 1);
    skip[0] = &run(image_tensor(image));
    for (int l = 1; l <= cfg.depth; ++l) {
        const Tensor& down = run(*skip[l - 1]);
        skip[l] = &run(down);
    }
    const Tensor* current = skip[cfg.depth];
    for (int l = cfg.depth; l >= 1; --l) {
        const Tensor& up = run(*current);
        Tensor cat;
        cat.h = up.h;
        cat.w = up.w;
        cat.data.resize(up.data.rows() + skip[l - 1]->data.rows(), up.data.cols());
        cat.data << up.data, skip[l - 1]->data;
        current = &run(cat);
    }
    const Tensor& head = run(*current);

    fp.pre_norm = head.data;
    fp.norms = fp.pre_norm.colwise().norm().transpose();
    fp.fmap.width = cfg.width;
    fp.fmap.height = cfg.height;
    fp.fmap.features.resize(fp.pre_norm.rows(), fp.pre_norm.cols());
    for (Eigen::Index p = 0; p < fp.pre_norm.cols(); ++p) {
        if (fp.norms[p] < kNormGuard) {
            fp.fmap.features.col(p).setZero();
            fp.fmap.features(0, p) = 1.0;
        } else {
            fp.fmap.features.col(p) = fp.pre_norm.col(p) / fp.norms[p];
        }
    }
    return fp;
}

struct SegmentLoss
{
    double loss = 0.0;
    long long correct = 0;
    long long labeled = 0;
};

// Loss of one segmentation; when grad_f / grad_h are given, adds scale * dloss into them.
SegmentLoss segment_loss(const FeatureMap& fmap, const LabelMap& labels, const LossLayerParams& layer, double scale,
                         Eigen::MatrixXd* grad_f, Eigen::MatrixXd* grad_h)
{
    if (labels.width != fmap.width || labels.height != fmap.height)
        throw std::invalid_argument("angular_softmax_loss: label map size does not match the feature map");
    if (layer.class_vectors.cols() != fmap.dim())
        throw std::invalid_argument("angular_softmax_loss: class vector dimension does not match the features");
    const auto k_count = static_cast<std::uint32_t>(layer.patch_count());

    std::vector<Eigen::Index> pixels;
    std::vector<std::uint32_t> truth;
    for (std::size_t i = 0; i < labels.data.size(); ++i) {
        const std::uint32_t l = labels.data[i];
        if (l == kNoLabel)
            continue;
        if (l >= k_count)
            throw std::invalid_argument("angular_softmax_loss: label id exceeds the patch count");
        pixels.push_back(static_cast<Eigen::Index>(i));
        truth.push_back(l);
    }
    SegmentLoss out;
    if (pixels.empty())
        return out;

    const auto count = static_cast<Eigen::Index>(pixels.size());
    Eigen::MatrixXd f(fmap.dim(), count);
    for (Eigen::Index i = 0; i < count; ++i)
        f.col(i) = fmap.features.col(pixels[i]);
    Eigen::MatrixXd z = layer.class_vectors * f; // K x P

    double total = 0.0;
    for (Eigen::Index i = 0; i < count; ++i) {
        Eigen::Index arg = 0;
        const double zmax = z.col(i).maxCoeff(&arg);
        const double lse = zmax + std::log((z.col(i).array() - zmax).exp().sum());
        total += lse - z(truth[i], i);
        if (arg == static_cast<Eigen::Index>(truth[i]))
            ++out.correct;
        if (grad_f) {
            z.col(i) = (z.col(i).array() - lse).exp(); // softmax
            z(truth[i], i) -= 1.0;
        }
    }
    out.loss = total / static_cast<double>(count);
    out.labeled = count;

    if (grad_f) {
        const double s = scale / static_cast<double>(count);
        const Eigen::MatrixXd gz = s * z;
        const Eigen::MatrixXd gf = layer.class_vectors.transpose() * gz;
        for (Eigen::Index i = 0; i < count; ++i)
            grad_f->col(pixels[i]) += gf.col(i);
        grad_h->noalias() += gz * f.transpose();
    }
    return out;
}

std::vector<double> resolve_weights(const std::vector<LossLayerParams>& layers, const std::vector<double>& w)
{
    if (w.empty())
        return std::vector<double>(layers.size(), 1.0);
    if (w.size() != layers.size())
        throw std::invalid_argument("segment weight count does not match the loss layers");
    return w;
}

[[noreturn]] void report_non_finite(const NetWeights& weights, const std::vector<LossLayerParams>& layers)
{
    for (const auto& p : weights.params)
        if (!p.value.allFinite())
            throw std::runtime_error("non-finite loss: parameter '" + p.name + "' has non-finite entries");
    for (std::size_t s = 0; s < layers.size(); ++s)
        if (!layers[s].class_vectors.allFinite())
            throw std::runtime_error("non-finite loss: parameter 'class_vectors_" + std::to_string(s) +
                                     "' has non-finite entries");
    throw std::runtime_error("non-finite loss");
}

} // namespace

void NetConfig::validate() const
{
    if (depth < 1)
        throw std::invalid_argument("NetConfig: depth must be at least 1");
    if (feature_dim < 2)
        throw std::invalid_argument("NetConfig: feature_dim must be at least 2");
    if (static_cast<int>(channels.size()) != depth + 1)
        throw std::invalid_argument("NetConfig: channels must list depth + 1 widths");
    for (int c : channels)
        if (c < 1)
            throw std::invalid_argument("NetConfig: channel widths must be positive");
    const int factor = 1 << depth;
    if (height < 1 || width < 1 || height % factor != 0 || width % factor != 0)
        throw std::invalid_argument("NetConfig: input size must be divisible by 2^depth");
}

std::size_t NetWeights::scalar_count() const
{
    std::size_t n = 0;
    for (const auto& p : params)
        n += static_cast<std::size_t>(p.value.size());
    return n;
}

std::vector<std::string> layer_names(const NetConfig& config)
{
    std::vector<std::string> names;
    for (const auto& s : layer_specs(config))
        names.push_back(s.name);
    return names;
}

NetWeights zero_weights(const NetConfig& config)
{
    config.validate();
    NetWeights w;
    w.config = config;
    for (const auto& s : layer_specs(config)) {
        const auto [rows, cols] = weight_shape(s);
        w.params.push_back({s.name + ".weight", Eigen::MatrixXd::Zero(rows, cols)});
        w.params.push_back({s.name + ".bias", Eigen::MatrixXd::Zero(s.out, 1)});
    }
    return w;
}

NetWeights init_weights(const NetConfig& config)
{
    NetWeights w = zero_weights(config);
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto specs = layer_specs(config);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const double stddev = std::sqrt(2.0 / fan_in(specs[i]));
        Eigen::MatrixXd& m = w.params[2 * i].value;
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            for (Eigen::Index r = 0; r < m.rows(); ++r)
                m(r, c) = stddev * normal(rng);
    }
    return w;
}

void LossLayerParams::renormalize()
{
    for (Eigen::Index j = 0; j < class_vectors.rows(); ++j) {
        const double n = class_vectors.row(j).norm();
        if (n < kNormGuard) {
            class_vectors.row(j).setZero();
            class_vectors(j, 0) = 1.0;
        } else {
            class_vectors.row(j) /= n;
        }
    }
}

LossLayerParams init_loss_layer(int patch_count, int feature_dim, std::uint64_t seed)
{
    if (patch_count < 1 || feature_dim < 1)
        throw std::invalid_argument("init_loss_layer: sizes must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    LossLayerParams layer{Eigen::MatrixXd(patch_count, feature_dim)};
    for (Eigen::Index j = 0; j < layer.class_vectors.rows(); ++j)
        for (Eigen::Index d = 0; d < layer.class_vectors.cols(); ++d)
            layer.class_vectors(j, d) = normal(rng);
    layer.renormalize();
    return layer;
}

FeatureMap forward(const NetWeights& weights, const RgbImage& image)
{
    return run_forward(weights, image).fmap;
}

double angular_softmax_loss(const FeatureMap& fmap, const LabelMap& labels, const LossLayerParams& layer)
{
    return segment_loss(fmap, labels, layer, 1.0, nullptr, nullptr).loss;
}

LossResult loss_and_gradients(const NetWeights& weights, const std::vector<LossLayerParams>& layers,
                              const std::vector<const TrainingExample*>& batch,
                              const std::vector<double>& segment_weights)
{
    const std::vector<double> sw = resolve_weights(layers, segment_weights);
    LossResult result;
    for (const auto& p : weights.params)
        result.weight_grads.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
    for (const auto& l : layers)
        result.layer_grads.push_back(Eigen::MatrixXd::Zero(l.class_vectors.rows(), l.class_vectors.cols()));
    if (batch.empty())
        return result;

    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    for (const TrainingExample* ex : batch) {
        if (ex->labels.size() != layers.size())
            throw std::invalid_argument("loss_and_gradients: need one label map per segmentation");
        ForwardPass fp = run_forward(weights, ex->image);
        Eigen::MatrixXd grad_f = Eigen::MatrixXd::Zero(fp.fmap.features.rows(), fp.fmap.features.cols());
        for (std::size_t s = 0; s < layers.size(); ++s) {
            const SegmentLoss sl =
                segment_loss(fp.fmap, ex->labels[s], layers[s], sw[s] * inv_batch, &grad_f, &result.layer_grads[s]);
            result.loss += sw[s] * sl.loss * inv_batch;
            result.correct += sl.correct;
            result.labeled += sl.labeled;
        }

        // Through f = z / |z|; the guarded fallback is constant.
        Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(fp.pre_norm.rows(), fp.pre_norm.cols());
        for (Eigen::Index p = 0; p < grad.cols(); ++p) {
            if (fp.norms[p] < kNormGuard)
                continue;
            const auto f = fp.fmap.features.col(p);
            grad.col(p) = (grad_f.col(p) - f * f.dot(grad_f.col(p))) / fp.norms[p];
        }

        const int depth = weights.config.depth;
        const auto& specs = fp.specs;
        const auto& P = weights.params;
        auto& G = result.weight_grads;
        std::size_t li = specs.size() - 1; // head
        grad = backprop_layer(specs[li], P[2 * li].value, fp.io[li], grad, G[2 * li], G[2 * li + 1]);

        // Decoder, innermost last in forward order, so walk it backwards.
        std::vector<Eigen::MatrixXd> skip_grad(depth + 1);
        for (int l = 0; l <= depth; ++l)
            skip_grad[l] = Eigen::MatrixXd::Zero(specs[l == 0 ? 0 : 2 * l].out, 1);
        for (int l = 1; l <= depth; ++l) {
            --li; // dec(l-1)
            const Eigen::MatrixXd g_cat = backprop_layer(specs[li], P[2 * li].value, fp.io[li], grad, G[2 * li], G[2 * li + 1]);
            const Eigen::Index c_up = specs[li - 1].out;
            const Eigen::MatrixXd g_skip = g_cat.bottomRows(g_cat.rows() - c_up);
            if (skip_grad[l - 1].cols() == 1)
                skip_grad[l - 1] = g_skip;
            else
                skip_grad[l - 1] += g_skip;
            const Eigen::MatrixXd g_up = g_cat.topRows(c_up);
            --li; // up(l)
            grad = backprop_layer(specs[li], P[2 * li].value, fp.io[li], g_up, G[2 * li], G[2 * li + 1]);
        }
        // grad is now with respect to the deepest encoder output.
        skip_grad[depth] = skip_grad[depth].cols() == 1 ? grad : Eigen::MatrixXd(skip_grad[depth] + grad);

        for (int l = depth; l >= 1; --l) {
            const std::size_t enc = 2 * l;
            const std::size_t down = 2 * l - 1;
            Eigen::MatrixXd g = backprop_layer(specs[enc], P[2 * enc].value, fp.io[enc], skip_grad[l], G[2 * enc],
                                               G[2 * enc + 1]);
            g = backprop_layer(specs[down], P[2 * down].value, fp.io[down], g, G[2 * down], G[2 * down + 1]);
            if (skip_grad[l - 1].cols() == 1)
                skip_grad[l - 1] = g;
            else
                skip_grad[l - 1] += g;
        }
        backprop_layer(specs[0], P[0].value, fp.io[0], skip_grad[0], G[0], G[1]);
    }
    if (!std::isfinite(result.loss))
        report_non_finite(weights, layers);
    return result;
}

double batch_loss(const NetWeights& weights, const std::vector<LossLayerParams>& layers,
                  const std::vector<const TrainingExample*>& batch, const std::vector<double>& segment_weights)
{
    const std::vector<double> sw = resolve_weights(layers, segment_weights);
    if (batch.empty())
        return 0.0;
    double loss = 0.0;
    for (const TrainingExample* ex : batch) {
        if (ex->labels.size() != layers.size())
            throw std::invalid_argument("batch_loss: need one label map per segmentation");
        const FeatureMap fmap = forward(weights, ex->image);
        for (std::size_t s = 0; s < layers.size(); ++s)
            loss += sw[s] * angular_softmax_loss(fmap, ex->labels[s], layers[s]);
    }
    loss /= static_cast<double>(batch.size());
    if (!std::isfinite(loss))
        report_non_finite(weights, layers);
    return loss;
}

Eigen::VectorXd sample_feature(const FeatureMap& fmap, double x, double y)
{
    if (!(x >= 0.0 && y >= 0.0 && x <= fmap.width - 1 && y <= fmap.height - 1))
        return Eigen::VectorXd::Zero(fmap.dim());
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;
    if (fx == 0.0 && fy == 0.0)
        return fmap.at(x0, y0);
    const int x1 = std::min(x0 + 1, fmap.width - 1);
    const int y1 = std::min(y0 + 1, fmap.height - 1);
    const Eigen::VectorXd v = (1 - fx) * (1 - fy) * fmap.at(x0, y0) + fx * (1 - fy) * fmap.at(x1, y0) +
                              (1 - fx) * fy * fmap.at(x0, y1) + fx * fy * fmap.at(x1, y1);
    const double n = v.norm();
    if (n < kNormGuard)
        return Eigen::VectorXd::Unit(fmap.dim(), 0);
    return v / n;
}

} // namespace dff::net
