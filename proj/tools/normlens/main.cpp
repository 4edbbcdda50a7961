#include <iostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "common.hpp"
#include "normlens/ingest.hpp"

namespace {

int fail(int code, const char* kind, const std::string& message) {
  nlohmann::ordered_json err{{"error", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << err.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace normlens::cli;
  CLI::App app{"normlens: normalization, attention shift and entropy-bound experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "normlens 0.1.0");

  int rc = kPass;
  register_norm(app, rc);
  register_shift(app, rc);
  register_signflip(app, rc);
  register_elb(app, rc);
  register_gradcheck(app, rc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version come through here with exit code 0
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsageError;
  } catch (const normlens::ParseError& e) {
    return fail(kUsageError, "parse", e.what());
  } catch (const UsageError& e) {
    return fail(kUsageError, "usage", e.what());
  } catch (const std::invalid_argument& e) {
    return fail(kUsageError, "invalid_argument", e.what());
  } catch (const std::domain_error& e) {
    return fail(kAssertionFailed, "domain", e.what());
  } catch (const std::exception& e) {
    return fail(kUsageError, "io", e.what());
  }
  return rc;
}
