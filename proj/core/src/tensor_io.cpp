#include "dff/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace dff::io {

static_assert(std::endian::native == std::endian::little, "tensor container assumes a little-endian host");

namespace {

template <typename T>
std::vector<std::uint8_t> to_bytes(const T* data, std::size_t n)
{
    std::vector<std::uint8_t> out(n * sizeof(T));
    if (n)
        std::memcpy(out.data(), data, out.size());
    return out;
}

template <typename T>
std::vector<T> from_bytes(const std::vector<std::uint8_t>& bytes)
{
    std::vector<T> out(bytes.size() / sizeof(T));
    if (!out.empty())
        std::memcpy(out.data(), bytes.data(), out.size() * sizeof(T));
    return out;
}

template <typename T>
void put(std::vector<std::uint8_t>& out, T v)
{
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
}

class Reader
{
  public:
    explicit Reader(const std::vector<std::uint8_t>& b) : bytes_(b) {}

    template <typename T>
    T get()
    {
        T v;
        need(sizeof(T));
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    std::vector<std::uint8_t> take(std::size_t n)
    {
        need(n);
        std::vector<std::uint8_t> out(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                      bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return out;
    }

    bool done() const { return pos_ == bytes_.size(); }

  private:
    void need(std::size_t n) const
    {
        if (bytes_.size() - pos_ < n)
            throw std::runtime_error("tensor container: truncated data");
    }

    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

void check_count(const std::vector<std::uint32_t>& dims, std::size_t n, const std::string& name)
{
    std::size_t expect = 1;
    for (auto d : dims)
        expect *= d;
    if (expect != n)
        throw std::invalid_argument("tensor '" + name + "': dims do not match the value count");
}

} // namespace

std::size_t dtype_size(DType t)
{
    switch (t) {
    case DType::F32: return 4;
    case DType::F64: return 8;
    case DType::U32: return 4;
    case DType::U8: return 1;
    }
    throw std::invalid_argument("unknown dtype");
}

std::size_t Tensor::element_count() const
{
    std::size_t n = 1;
    for (auto d : dims)
        n *= d;
    return n;
}

Tensor Tensor::from_matrix(const std::string& name, const Eigen::MatrixXd& m)
{
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
    return {name, DType::F64, {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())},
            to_bytes(rm.data(), static_cast<std::size_t>(rm.size()))};
}

Tensor Tensor::from_vector(const std::string& name, const Eigen::VectorXd& v)
{
    return {name, DType::F64, {static_cast<std::uint32_t>(v.size())}, to_bytes(v.data(), static_cast<std::size_t>(v.size()))};
}

Tensor Tensor::from_f64(const std::string& name, const std::vector<std::uint32_t>& dims, const std::vector<double>& values)
{
    check_count(dims, values.size(), name);
    return {name, DType::F64, dims, to_bytes(values.data(), values.size())};
}

Tensor Tensor::from_f32(const std::string& name, const std::vector<std::uint32_t>& dims, const std::vector<float>& values)
{
    check_count(dims, values.size(), name);
    return {name, DType::F32, dims, to_bytes(values.data(), values.size())};
}

Tensor Tensor::from_u32(const std::string& name, const std::vector<std::uint32_t>& dims,
                        const std::vector<std::uint32_t>& values)
{
    check_count(dims, values.size(), name);
    return {name, DType::U32, dims, to_bytes(values.data(), values.size())};
}

Tensor Tensor::from_u8(const std::string& name, const std::vector<std::uint32_t>& dims,
                       const std::vector<std::uint8_t>& values)
{
    check_count(dims, values.size(), name);
    return {name, DType::U8, dims, values};
}

Tensor Tensor::from_text(const std::string& name, const std::string& text)
{
    return {name, DType::U8, {static_cast<std::uint32_t>(text.size())}, std::vector<std::uint8_t>(text.begin(), text.end())};
}

std::vector<double> Tensor::to_f64() const
{
    if (dtype == DType::F64)
        return from_bytes<double>(bytes);
    if (dtype == DType::F32) {
        const auto f = from_bytes<float>(bytes);
        return {f.begin(), f.end()};
    }
    throw std::runtime_error("tensor '" + name + "' is not floating point");
}

std::vector<std::uint32_t> Tensor::to_u32() const
{
    if (dtype != DType::U32)
        throw std::runtime_error("tensor '" + name + "' is not u32");
    return from_bytes<std::uint32_t>(bytes);
}

std::string Tensor::to_text() const
{
    if (dtype != DType::U8)
        throw std::runtime_error("tensor '" + name + "' is not u8");
    return {bytes.begin(), bytes.end()};
}

Eigen::MatrixXd Tensor::to_matrix() const
{
    const std::vector<double> v = to_f64();
    if (dims.size() == 1)
        return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    if (dims.size() != 2)
        throw std::runtime_error("tensor '" + name + "' is not a matrix");
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(v.data(), dims[0],
                                                                                                    dims[1]);
}

Eigen::VectorXd Tensor::to_vector() const
{
    const std::vector<double> v = to_f64();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void TensorContainer::add(Tensor tensor)
{
    if (tensor.name.empty() || tensor.name.size() > 0xFFFF)
        throw std::invalid_argument("tensor name must have 1 to 65535 bytes");
    if (tensor.dims.size() > 0xFF)
        throw std::invalid_argument("tensor '" + tensor.name + "': rank too large");
    if (contains(tensor.name))
        throw std::invalid_argument("duplicate tensor name '" + tensor.name + "'");
    if (tensor.bytes.size() != tensor.element_count() * dtype_size(tensor.dtype))
        throw std::invalid_argument("tensor '" + tensor.name + "': payload size does not match its dims");
    tensors_.push_back(std::move(tensor));
}

bool TensorContainer::contains(const std::string& name) const
{
    return std::any_of(tensors_.begin(), tensors_.end(), [&](const Tensor& t) { return t.name == name; });
}

const Tensor& TensorContainer::get(const std::string& name) const
{
    for (const auto& t : tensors_)
        if (t.name == name)
            return t;
    throw std::out_of_range("tensor '" + name + "' not found in container");
}

std::vector<std::uint8_t> TensorContainer::encode() const
{
    std::vector<std::uint8_t> out = {'D', 'F', 'F', 'T'};
    put<std::uint32_t>(out, kVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors_.size()));
    for (const auto& t : tensors_) {
        put<std::uint16_t>(out, static_cast<std::uint16_t>(t.name.size()));
        out.insert(out.end(), t.name.begin(), t.name.end());
        put<std::uint8_t>(out, static_cast<std::uint8_t>(t.dtype));
        put<std::uint8_t>(out, static_cast<std::uint8_t>(t.dims.size()));
        for (auto d : t.dims)
            put<std::uint32_t>(out, d);
        out.insert(out.end(), t.bytes.begin(), t.bytes.end());
    }
    return out;
}

TensorContainer TensorContainer::decode(const std::vector<std::uint8_t>& bytes)
{
    Reader r(bytes);
    const auto magic = r.take(4);
    if (std::memcmp(magic.data(), "DFFT", 4) != 0)
        throw std::runtime_error("tensor container: bad magic");
    const auto version = r.get<std::uint32_t>();
    if (version != kVersion)
        throw std::runtime_error("tensor container: unsupported version " + std::to_string(version));
    const auto count = r.get<std::uint32_t>();
    TensorContainer c;
    for (std::uint32_t i = 0; i < count; ++i) {
        Tensor t;
        const auto len = r.get<std::uint16_t>();
        const auto name = r.take(len);
        t.name.assign(name.begin(), name.end());
        const auto dt = r.get<std::uint8_t>();
        if (dt > 3)
            throw std::runtime_error("tensor container: unknown dtype in '" + t.name + "'");
        t.dtype = static_cast<DType>(dt);
        const auto rank = r.get<std::uint8_t>();
        for (int k = 0; k < rank; ++k)
            t.dims.push_back(r.get<std::uint32_t>());
        t.bytes = r.take(t.element_count() * dtype_size(t.dtype));
        try {
            c.add(std::move(t));
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(std::string("tensor container: ") + e.what());
        }
    }
    if (!r.done())
        throw std::runtime_error("tensor container: trailing bytes");
    return c;
}

void TensorContainer::write(const std::string& path) const { write_file(path, encode()); }

TensorContainer TensorContainer::read(const std::string& path) { return decode(read_file(path)); }

std::vector<std::uint8_t> read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open '" + path + "' for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw std::runtime_error("failed writing '" + path + "'");
}

void write_text_file(const std::string& path, const std::string& text)
{
    write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::string read_text_file(const std::string& path)
{
    const auto b = read_file(path);
    return {b.begin(), b.end()};
}

} // namespace dff::io
