#pragma once

namespace census {

/// Selects between the OpenMP kernels and their serial reference versions.
/// Both produce identical results; the serial path exists for testing and
/// for benchmarking the parallel one against it.
enum class Exec { serial, parallel };

}  // namespace census
