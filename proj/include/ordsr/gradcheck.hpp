#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ordsr/optim.hpp"

namespace ordsr::gradcheck {

struct Options {
  std::uint64_t seed = 7;
  int size = 16;       // input height and width
  int batch = 2;
  int depth = 3;
  int threshold = 4;
  int hidden = 64;
  int probes = 500;    // sampled parameter entries
  int bank_probes = 128;  // of which at least this many come from the CDCT bank
  double step = 2e-3;  // fourth-order stencil
  double tolerance = 1e-5;
  double floor = 1e-8;  // denominator floor of the relative error
  double sigma = 1e-3;
  double gamma = 1.0;
  double epsilon = 1e-3;
  bool corrupt = false;  // perturb the analytic gradient; the check must then fail
};

struct GroupReport {
  std::string name;
  int probes = 0;
  double max_rel_error = 0.0;
};

struct Report {
  std::vector<GroupReport> groups;
  int probes = 0;
  int kinks_skipped = 0;  // probes whose +/- step crossed a ReLU boundary
  double max_rel_error = 0.0;
  bool passed = false;
};

/// |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor);

/// Fourth-order central differences of the full training loss (data + weight decay + orthogonality)
/// against total_loss gradients on a random toy network and batch.
Report check_training_loss(const Options& opts);

}  // namespace ordsr::gradcheck
