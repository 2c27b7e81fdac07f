#pragma once

namespace vcsp {

/// Entry point behind the `vcsp` binary. Exit codes: 0 success, 1 usage or
/// constraint violation, 2 I/O or format error, 3 numeric failure.
int run_cli(int argc, const char* const* argv);

}  // namespace vcsp
