// yang2jin: converts one annotated YANG module into a JIN model file.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "orc/error.hpp"
#include "orc/yang.hpp"

namespace fs = std::filesystem;
using namespace orc;

namespace {

struct Failed {
  std::string file;
  std::size_t line;
  std::string rule;
  std::string message;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Failed{p.string(), 0, "io-error", "cannot read file"};
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

yang::Module parse_file(const fs::path& p) {
  try {
    return yang::parse_yang(read_file(p));
  } catch (const SyntaxError& e) {
    throw Failed{p.string(), e.line(), e.code(), e.reason()};
  } catch (const UnsupportedStatement& e) {
    throw Failed{p.string(), e.line(), e.code(), "unsupported statement '" + e.statement() + "'"};
  }
}

// Loads every module reachable through imports, depth first.
void load_imports(const yang::Module& m, const fs::path& from, const std::vector<fs::path>& dirs,
                  yang::ModelSet& out, std::set<std::string>& seen) {
  for (const auto& imp : m.imports) {
    if (imp.module == yang::kExtensionModule || !seen.insert(imp.module).second) continue;
    std::optional<fs::path> found;
    for (const auto& d : dirs) {
      if (fs::exists(d / (imp.module + ".yang"))) {
        found = d / (imp.module + ".yang");
        break;
      }
    }
    if (!found) throw Failed{from.string(), 0, "unknown-module", "cannot find imported module '" + imp.module + "'"};
    auto dep = parse_file(*found);
    load_imports(dep, *found, dirs, out, seen);
    out.push_back(std::move(dep));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convert an annotated YANG module to JIN"};
  std::string input;
  std::vector<std::string> include_dirs;
  std::string output;
  app.add_option("module", input, "YANG source file")->required();
  app.add_option("-I,--include", include_dirs, "Directory searched for imported modules")->allow_extra_args(false);
  app.add_option("-o,--output", output, "Output file (default: standard output)");
  CLI11_PARSE(app, argc, argv);

  try {
    const fs::path path(input);
    auto module = parse_file(path);
    std::vector<fs::path> dirs(include_dirs.begin(), include_dirs.end());
    dirs.push_back(path.parent_path().empty() ? fs::path(".") : path.parent_path());

    yang::ModelSet imports;
    std::set<std::string> seen;
    load_imports(module, path, dirs, imports, seen);
    try {
      yang::resolve_types(module, imports);
    } catch (const SyntaxError& e) {
      throw Failed{input, e.line(), e.code(), e.reason()};
    } catch (const UnknownType& e) {
      throw Failed{input, 0, e.code(), e.what()};
    }

    const auto diagnostics = yang::check_annotations(module);
    for (const auto& d : diagnostics) std::cerr << input << ":" << d.line << ": " << d.rule << ": " << d.message << "\n";
    if (!diagnostics.empty()) return 1;

    const auto jin = yang::yang_to_jin(module);
    if (output.empty()) {
      std::cout << jin;
    } else {
      std::ofstream out(output, std::ios::binary);
      out << jin;
      if (!out) throw Failed{output, 0, "io-error", "cannot write file"};
    }
    return 0;
  } catch (const Failed& f) {
    std::cerr << f.file << ":" << f.line << ": " << f.rule << ": " << f.message << "\n";
    return 1;
  }
}
