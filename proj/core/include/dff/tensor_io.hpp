#pragma once

#include "Eigen/Core"

#include <cstdint>
#include <string>
#include <vector>

namespace dff::io {

enum class DType : std::uint8_t
{
    F32 = 0,
    F64 = 1,
    U32 = 2,
    U8 = 3
};

std::size_t dtype_size(DType t);

/// Named n-d array with raw little-endian row-major payload.
struct Tensor
{
    std::string name;
    DType dtype = DType::F64;
    std::vector<std::uint32_t> dims;
    std::vector<std::uint8_t> bytes;

    std::size_t element_count() const;

    static Tensor from_matrix(const std::string& name, const Eigen::MatrixXd& m);
    static Tensor from_vector(const std::string& name, const Eigen::VectorXd& v);
    static Tensor from_f64(const std::string& name, const std::vector<std::uint32_t>& dims, const std::vector<double>& values);
    static Tensor from_f32(const std::string& name, const std::vector<std::uint32_t>& dims, const std::vector<float>& values);
    static Tensor from_u32(const std::string& name, const std::vector<std::uint32_t>& dims,
                           const std::vector<std::uint32_t>& values);
    static Tensor from_u8(const std::string& name, const std::vector<std::uint32_t>& dims,
                          const std::vector<std::uint8_t>& values);
    static Tensor from_text(const std::string& name, const std::string& text);

    /// Values widened to double (f32 and f64 only).
    std::vector<double> to_f64() const;
    std::vector<std::uint32_t> to_u32() const;
    std::string to_text() const;
    /// Rank 2 as rows x cols; rank 1 as a column.
    Eigen::MatrixXd to_matrix() const;
    Eigen::VectorXd to_vector() const;

    bool operator==(const Tensor&) const = default;
};

/**
 * Binary container: "DFFT", version u32, count u32, then per tensor the
 * name length (u16), name, dtype (u8), rank (u8), dims (u32 each) and the
 * payload. All integers little-endian.
 */
class TensorContainer
{
  public:
    static constexpr std::uint32_t kVersion = 1;

    /// @throws std::invalid_argument on a duplicate name or inconsistent payload size.
    void add(Tensor tensor);
    bool contains(const std::string& name) const;
    /// @throws std::out_of_range naming the missing tensor.
    const Tensor& get(const std::string& name) const;
    const std::vector<Tensor>& tensors() const { return tensors_; }

    std::vector<std::uint8_t> encode() const;
    /// @throws std::runtime_error on malformed input.
    static TensorContainer decode(const std::vector<std::uint8_t>& bytes);

    void write(const std::string& path) const;
    static TensorContainer read(const std::string& path);

    bool operator==(const TensorContainer&) const = default;

  private:
    std::vector<Tensor> tensors_;
};

/// Name of the text tensor that carries the provenance record.
inline constexpr const char* kProvenanceTensor = "__provenance";

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

} // namespace dff::io
