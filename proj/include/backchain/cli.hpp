#pragma once

namespace backchain {

/// Exit codes: 0 ok, 1 usage, 2 data or schema, 3 backend or transport,
/// 4 threshold violation.
int run_cli(int argc, char** argv);

}  // namespace backchain
