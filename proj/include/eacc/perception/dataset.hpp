#pragma once

#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "eacc/errors.hpp"
#include "eacc/perception/regressor.hpp"
#include "eacc/perception/sensor.hpp"
#include "eacc/text.hpp"

namespace eacc::perception {

// Headways drawn uniformly from the sensor range, observed in-distribution.
inline TrainingSet generate_training_set(const SensorModel& model, std::size_t count,
                                         std::uint64_t seed) {
  model.validate();
  detail::require(count > 0, "generate_training_set: count must be > 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> headway(model.d_lo, model.d_hi);
  TrainingSet out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double d = headway(rng);
    out.push_back({d, synth_observe(model, d, false, rng)});
  }
  return out;
}

// CSV: header `d,f1,...,f2F`, left features then right features.
inline void write_training_csv(std::ostream& os, const TrainingSet& data) {
  detail::require(!data.empty(), "write_training_csv: empty set");
  const auto f = data.front().obs.dim();
  os << "d";
  for (Eigen::Index j = 1; j <= 2 * f; ++j) os << ",f" << j;
  os << '\n';
  for (const auto& item : data) {
    os << text::format_double(item.d);
    for (Eigen::Index j = 0; j < f; ++j) os << ',' << text::format_double(item.obs.left[j]);
    for (Eigen::Index j = 0; j < f; ++j) os << ',' << text::format_double(item.obs.right[j]);
    os << '\n';
  }
}

inline TrainingSet read_training_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("training CSV is empty");
  const auto header = text::split(text::trim(line));
  if (header.size() < 3 || (header.size() - 1) % 2 != 0 || text::trim(header[0]) != "d")
    throw ParseError("training CSV header must be d,f1..f2F", 1);
  for (std::size_t j = 1; j < header.size(); ++j)
    if (text::trim(header[j]) != "f" + std::to_string(j))
      throw ParseError("training CSV header column " + std::to_string(j + 1) + " must be f" +
                           std::to_string(j),
                       1);
  const auto f = static_cast<Eigen::Index>((header.size() - 1) / 2);
  TrainingSet out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto cells = text::split(line);
    if (cells.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " columns, got " +
                           std::to_string(cells.size()),
                       lineno);
    std::vector<double> vals;
    for (auto c : cells) {
      auto v = text::parse_double(c);
      if (!v) throw ParseError("non-numeric cell '" + std::string(c) + "'", lineno);
      vals.push_back(*v);
    }
    LabeledObservation item{vals[0], {Eigen::VectorXd(f), Eigen::VectorXd(f)}};
    for (Eigen::Index j = 0; j < f; ++j) {
      item.obs.left[j] = vals[static_cast<std::size_t>(1 + j)];
      item.obs.right[j] = vals[static_cast<std::size_t>(1 + f + j)];
    }
    out.push_back(std::move(item));
  }
  if (out.empty()) throw ParseError("training CSV has no data rows");
  return out;
}

inline TrainingSet load_training_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_training_csv(in);
}

}  // namespace eacc::perception
