#pragma once

namespace sagp {

// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
int cli_main(int argc, const char* const* argv);

}  // namespace sagp
