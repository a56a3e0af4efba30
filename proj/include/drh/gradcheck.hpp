// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace drh {

/// Finite-difference check of every layer backward, every loss gradient, and the whole
/// network under the composite objective, all in double precision.
struct GradcheckOptions {
  std::uint64_t seed = 1;
  std::size_t trials = 50;          // random instances per check
  std::size_t network_trials = 10;  // end-to-end checks are the slow part
  double step = 1e-3;               // initial step of the extrapolated central difference
  // Relative error |a - n| / max(|a|, |n|, floor). The floor keeps entries whose true
  // gradient is ~0 from turning round-off into a large ratio.
  double floor = 1e-4;
  double tolerance = 1e-6;
  std::size_t samples_per_tensor = 6;  // entries probed per network parameter tensor
};

struct GradcheckEntry {
  std::string name;
  double max_rel_error = 0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;  // probes whose difference quotient straddled a ReLU kink
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  double tolerance = 1e-6;
  double seconds = 0;

  bool passed() const;
  double worst() const;
  std::string to_text(bool timing = true) const;  // timing off keeps the text reproducible
};

GradcheckReport run_gradcheck(const GradcheckOptions& options = {});

}  // namespace drh
