#pragma once

#include "optima/model.hpp"
#include "optima/trainer.hpp"

#include <cstring>
#include <filesystem>
#include <random>
#include <unistd.h>

namespace testing {

inline optima::Matrix gaussian(Eigen::Index rows, Eigen::Index cols, optima::Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  optima::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

inline bool same_bits(const optima::Matrix& a, const optima::Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

inline bool same_bits(const optima::Vector& a, const optima::Vector& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

/// A small token-stats setup that trains in well under a second.
struct Small {
  optima::DomainPairSpec task;
  optima::ModelSpec spec;
  optima::Model model;
  optima::DomainPair pair;
};

inline Small small_setup(std::uint64_t seed = 1, int classes = 3, double shift = 0.5) {
  Small s;
  s.task.classes = classes;
  s.task.shift = shift;
  s.task.source_size = 200;
  s.task.target_size = 200;
  s.task.eval_size = 100;
  s.task.seed = seed;
  s.spec.dim = 16;
  s.spec.seed = seed;
  s.model = optima::build_model(s.spec, s.task, optima::default_verbalizer(classes).labels);
  s.pair = optima::generate_pair(s.task);
  return s;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("optima-unit-" + std::to_string(::getpid())) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing
