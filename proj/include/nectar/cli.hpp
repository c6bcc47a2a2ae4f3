#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nectar::cli {

// Exit codes: 0 success, 1 I/O or validation failure, 2 usage error.
int main(std::vector<std::string> args, std::ostream& out, std::ostream& err);
int main(int argc, char** argv);

}  // namespace nectar::cli
