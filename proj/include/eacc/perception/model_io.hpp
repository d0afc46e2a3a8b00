#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "eacc/errors.hpp"
#include "eacc/perception/regressor.hpp"
#include "eacc/perception/sensor.hpp"
#include "eacc/text.hpp"

// Plain-text model container. Every number is written in shortest
// round-trip form, so save/load is bit-exact.
//
//   eacc-regressor 1
//   F <feature dim>
//   H <hidden width>
//   epsilon <e>
//   sensor <key> <value> ... (scalars)
//   length_scales <n> <values>
//   ood_shift <n> <values>
//   w1 <rows> <cols> then one row per line
//   b1 <n> <values>
//   w2 <rows> <cols> then one row per line
//   b2 2 <values>
//   end
//
// An ensemble is a manifest listing member files relative to the manifest:
//
//   eacc-ensemble 1
//   members <n>
//   <file>   (n lines)

namespace eacc::perception {

struct StoredRegressor {
  RegressorParams params;
  SensorModel sensor;
};

struct Ensemble {
  std::vector<RegressorParams> members;
  SensorModel sensor;  // sensor used at training time
};

namespace model_io_detail {

inline void write_row(std::ostream& os, const double* data, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i) os << (i ? " " : "") << text::format_double(data[i]);
  os << '\n';
}

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  std::vector<std::string> tokens(const std::string& expect_key) {
    std::string line;
    while (std::getline(is_, line)) {
      ++line_;
      if (!text::trim(line).empty()) break;
      line.clear();
    }
    std::istringstream ss(line);
    std::vector<std::string> out;
    for (std::string t; ss >> t;) out.push_back(t);
    if (out.empty() || out[0] != expect_key)
      throw ParseError("expected '" + expect_key + "'", line_);
    return out;
  }

  double number(const std::string& tok) {
    auto v = text::parse_double(tok);
    if (!v) throw ParseError("bad number '" + tok + "'", line_);
    return *v;
  }

  long integer(const std::string& tok) {
    const double v = number(tok);
    if (v != static_cast<double>(static_cast<long>(v)) || v < 0)
      throw ParseError("expected a non-negative integer, got '" + tok + "'", line_);
    return static_cast<long>(v);
  }

  std::vector<double> values_line(Eigen::Index n) {
    std::string line;
    if (!std::getline(is_, line)) throw ParseError("unexpected end of model file", line_);
    ++line_;
    std::istringstream ss(line);
    std::vector<double> out;
    for (std::string t; ss >> t;) out.push_back(number(t));
    if (static_cast<Eigen::Index>(out.size()) != n)
      throw ParseError("expected " + std::to_string(n) + " values", line_);
    return out;
  }

  std::vector<double> vector_field(const std::string& key) {
    auto t = tokens(key);
    if (t.size() < 2) throw ParseError("missing length for '" + key + "'", line_);
    const auto n = integer(t[1]);
    if (static_cast<long>(t.size()) != n + 2)
      throw ParseError("'" + key + "' expects " + std::to_string(n) + " values", line_);
    std::vector<double> out;
    for (std::size_t i = 2; i < t.size(); ++i) out.push_back(number(t[i]));
    return out;
  }

  Eigen::MatrixXd matrix_field(const std::string& key, Eigen::Index rows, Eigen::Index cols) {
    auto t = tokens(key);
    if (t.size() != 3 || integer(t[1]) != rows || integer(t[2]) != cols)
      throw ParseError("'" + key + "' must be " + std::to_string(rows) + " x " +
                           std::to_string(cols),
                       line_);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      auto row = values_line(cols);
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
    }
    return m;
  }

 private:
  std::istream& is_;
  std::size_t line_ = 0;
};

}  // namespace model_io_detail

inline void write_regressor(std::ostream& os, const RegressorParams& p, const SensorModel& s) {
  using model_io_detail::write_row;
  using text::format_double;
  p.check_shapes();
  os << "eacc-regressor 1\n";
  os << "F " << p.feature_dim() << '\n';
  os << "H " << p.hidden() << '\n';
  os << "epsilon " << format_double(p.epsilon) << '\n';
  os << "sensor d_lo " << format_double(s.d_lo) << " d_hi " << format_double(s.d_hi) << " d_sat "
     << format_double(s.d_sat) << " base_noise " << format_double(s.base_noise)
     << " noise_growth " << format_double(s.noise_growth) << " parallax "
     << format_double(s.parallax) << " feature_gain " << format_double(s.feature_gain)
     << " feature_bias " << format_double(s.feature_bias) << " ood_scale "
     << format_double(s.ood_scale) << " seed " << s.seed << '\n';
  os << "length_scales " << s.length_scales.size();
  for (double v : s.length_scales) os << ' ' << format_double(v);
  os << "\nood_shift " << s.ood_shift.size();
  for (double v : s.ood_shift) os << ' ' << format_double(v);
  os << '\n';
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w1 = p.w1, w2 = p.w2;
  os << "w1 " << w1.rows() << ' ' << w1.cols() << '\n';
  for (Eigen::Index r = 0; r < w1.rows(); ++r) write_row(os, w1.row(r).data(), w1.cols());
  os << "b1 " << p.b1.size();
  for (Eigen::Index i = 0; i < p.b1.size(); ++i) os << ' ' << format_double(p.b1[i]);
  os << "\nw2 " << w2.rows() << ' ' << w2.cols() << '\n';
  for (Eigen::Index r = 0; r < w2.rows(); ++r) write_row(os, w2.row(r).data(), w2.cols());
  os << "b2 2 " << format_double(p.b2[0]) << ' ' << format_double(p.b2[1]) << '\n';
  os << "end\n";
}

inline StoredRegressor read_regressor(std::istream& is) {
  model_io_detail::Reader rd(is);
  auto magic = rd.tokens("eacc-regressor");
  if (magic.size() != 2 || magic[1] != "1") throw ParseError("unsupported model version", 1);
  const auto f = rd.integer(rd.tokens("F").at(1));
  const auto h = rd.integer(rd.tokens("H").at(1));
  if (f < 1 || h < 1) throw ParseError("F and H must be >= 1");

  StoredRegressor out;
  out.params = RegressorParams::zeros(static_cast<int>(f), static_cast<int>(h));
  out.params.epsilon = rd.number(rd.tokens("epsilon").at(1));

  auto st = rd.tokens("sensor");
  if (st.size() != 21) throw ParseError("sensor line must hold 10 key/value pairs");
  auto& s = out.sensor;
  double* slots[] = {&s.d_lo,     &s.d_hi,         &s.d_sat,        &s.base_noise, &s.noise_growth,
                     &s.parallax, &s.feature_gain, &s.feature_bias, &s.ood_scale};
  const char* names[] = {"d_lo",     "d_hi",         "d_sat",        "base_noise", "noise_growth",
                         "parallax", "feature_gain", "feature_bias", "ood_scale",  "seed"};
  for (std::size_t i = 0; i < 10; ++i) {
    if (st[1 + 2 * i] != names[i]) throw ParseError(std::string("sensor: expected ") + names[i]);
    if (i < 9)
      *slots[i] = rd.number(st[2 + 2 * i]);
    else
      s.seed = static_cast<std::uint64_t>(rd.integer(st[2 + 2 * i]));
  }
  s.length_scales = rd.vector_field("length_scales");
  s.ood_shift = rd.vector_field("ood_shift");

  auto& p = out.params;
  p.w1 = rd.matrix_field("w1", h, 2 * f);
  auto b1 = rd.vector_field("b1");
  if (static_cast<long>(b1.size()) != h) throw ParseError("b1 length must equal H");
  p.b1 = Eigen::Map<Eigen::VectorXd>(b1.data(), h);
  p.w2 = rd.matrix_field("w2", 2, h);
  auto b2 = rd.vector_field("b2");
  if (b2.size() != 2) throw ParseError("b2 must hold 2 values");
  p.b2 = {b2[0], b2[1]};
  rd.tokens("end");
  return out;
}

inline void save_ensemble(const std::filesystem::path& manifest, const Ensemble& ens) {
  detail::require(!ens.members.empty(), "save_ensemble: no members");
  const auto dir = manifest.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  const auto stem = manifest.stem().string();
  std::ofstream m(manifest);
  if (!m) throw ParseError("cannot write " + manifest.string());
  m << "eacc-ensemble 1\nmembers " << ens.members.size() << '\n';
  for (std::size_t i = 0; i < ens.members.size(); ++i) {
    const auto name = stem + "_member" + std::to_string(i) + ".model";
    std::ofstream f(dir / name);
    if (!f) throw ParseError("cannot write " + (dir / name).string());
    write_regressor(f, ens.members[i], ens.sensor);
    m << name << '\n';
  }
}

inline Ensemble load_ensemble(const std::filesystem::path& manifest) {
  std::ifstream m(manifest);
  if (!m) throw ParseError("cannot open ensemble manifest " + manifest.string());
  model_io_detail::Reader rd(m);
  auto magic = rd.tokens("eacc-ensemble");
  if (magic.size() != 2 || magic[1] != "1") throw ParseError("unsupported ensemble version", 1);
  const auto n = rd.integer(rd.tokens("members").at(1));
  if (n < 1) throw ParseError("ensemble has no members");
  Ensemble ens;
  for (long i = 0; i < n; ++i) {
    std::string name;
    if (!std::getline(m, name) || text::trim(name).empty())
      throw ParseError("manifest lists fewer members than declared");
    const auto path = manifest.parent_path() / std::string(text::trim(name));
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open member file " + path.string());
    auto stored = read_regressor(f);
    if (i == 0) ens.sensor = stored.sensor;
    if (!ens.members.empty() && stored.params.feature_dim() != ens.members.front().feature_dim())
      throw ParseError("member " + path.string() + " has a different feature dimension");
    ens.members.push_back(std::move(stored.params));
  }
  return ens;
}

}  // namespace eacc::perception
