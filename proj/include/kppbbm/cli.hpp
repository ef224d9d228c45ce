#pragma once

namespace kppbbm {

// Exit codes: 0 all checks passed, 1 numeric or check failure, 2 usage.
int run_cli(int argc, char** argv);

} // namespace kppbbm
