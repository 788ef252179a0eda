#pragma once

#include "mfadv/config.hpp"

namespace mfadv::fixtures {

/// The fixture on a coarse grid, cheap enough for unit tests.
inline RunConfig coarse_fixture(double dt = 0.01, Index paths = 2000) {
  RunConfig c = fixture_config();
  c.dt = dt;
  c.n_paths = paths;
  return c;
}

}  // namespace mfadv::fixtures
