// Shared exit-code handling for the command-line tools.
#pragma once

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "r3dla/experiment.hpp"

namespace r3dla::tools {

enum Exit { ok = 0, runtime_error = 1, config_error = 2 };

template <class F>
int guarded(F&& body) {
  try {
    body();
    return ok;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const ProgramError& e) {
    std::cerr << "program error: " << e.what() << "\n";
    return config_error;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return config_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return runtime_error;
  }
}

inline void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

inline int parse_cli(CLI::App& app, int argc, char** argv) {
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return config_error;
  }
  return -1;
}

}  // namespace r3dla::tools
