#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string_view>

namespace lnatune {

template <typename Scalar>
using Vector4 = Eigen::Matrix<Scalar, 4, 1>;
template <typename Scalar>
using Matrix4 = Eigen::Matrix<Scalar, 4, 4>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
// Row-major so that one row is one sample, as in the CSV files.
template <typename Scalar>
using SampleMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using ComboIndex = int;
inline constexpr int kNumCombos = 12;
inline constexpr int kNumParams = 4;
inline constexpr int kNumLatent = 4;

/// Order of the statistically modeled parameters in every 4-vector.
enum class Param : int { Gain = 0, NoiseFigure = 1, P1dB = 2, Current = 3 };

inline constexpr std::array<Param, kNumParams> kAllParams = {Param::Gain, Param::NoiseFigure,
                                                             Param::P1dB, Param::Current};

constexpr int index_of(Param p) { return static_cast<int>(p); }

/// Column name used in CSV files ("gain_db", "nf_db", ...).
std::string_view column_name(Param p);
/// Short name used in target strings and RMS reports ("gain", "nf", "p1db", "idc").
std::string_view short_name(Param p);
std::optional<Param> param_from_short_name(std::string_view name);

/// Performance of one device at one switch combination.
struct PerformanceVector {
  Vector4<double> values = Vector4<double>::Zero();
  // Return losses are carried through untouched; nothing models them.
  std::optional<double> s11_db;
  std::optional<double> s22_db;

  PerformanceVector() = default;
  PerformanceVector(double gain, double nf, double p1db, double idc) : values(gain, nf, p1db, idc) {}
  explicit PerformanceVector(const Vector4<double>& v) : values(v) {}

  double gain_db() const { return values[0]; }
  double nf_db() const { return values[1]; }
  double p1db_dbm() const { return values[2]; }
  double idc_ma() const { return values[3]; }
  double operator[](Param p) const { return values[index_of(p)]; }
  double& operator[](Param p) { return values[index_of(p)]; }

  bool all_finite() const { return values.allFinite(); }
  /// Finite, NF > 0 and IDC > 0.
  bool is_physical() const { return all_finite() && nf_db() > 0.0 && idc_ma() > 0.0; }

  friend bool operator==(const PerformanceVector& a, const PerformanceVector& b) {
    return a.values == b.values && a.s11_db == b.s11_db && a.s22_db == b.s22_db;
  }
};

using ComboPerformance = std::map<ComboIndex, PerformanceVector>;

inline bool valid_combo(ComboIndex c) { return c >= 0 && c < kNumCombos; }

}  // namespace lnatune
