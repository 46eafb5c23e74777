#pragma once

#include <string>
#include <vector>

#include "rbt/error.hpp"

namespace rbt::cli {

// 2 config, 3 data, 4 protocol, 1 anything else.
int exit_code(ErrorCode code);

// Full command line including the program name.
int run(const std::vector<std::string>& args);
int main(int argc, char** argv);

}  // namespace rbt::cli
