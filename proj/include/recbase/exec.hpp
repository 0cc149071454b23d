#pragma once

namespace recbase {

/// Selects between the OpenMP kernel and its serial reference.
/// Both produce identical results; the serial path exists for testing and
/// benchmarking.
enum class Exec { serial, parallel };

/// Sets the OpenMP worker pool size; 0 keeps the runtime default.
void set_num_threads(int n);

int num_threads();

}  // namespace recbase
