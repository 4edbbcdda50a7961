#pragma once

#include <CLI11.hpp>

namespace normlens::cli {

// Each registers one subcommand tree; the callback stores its exit code in rc.
void register_norm(CLI::App& app, int& rc);
void register_shift(CLI::App& app, int& rc);
void register_signflip(CLI::App& app, int& rc);
void register_elb(CLI::App& app, int& rc);
void register_gradcheck(CLI::App& app, int& rc);

}  // namespace normlens::cli
