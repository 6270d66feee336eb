#include <CLI11.hpp>

#include "rigidhom/cli.hpp"

int main(int argc, char **argv) {
  using namespace rigidhom;
  CLI::App app{"Surface energies on piecewise rigid fields: cell problems, homogenisation, approximation"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  std::uint64_t seed = 0;
  int jobs = 1;
  const char *names[] = {"fhom", "cell", "validate", "approx", "recovery", "counterexample"};
  const char *help[] = {"estimate f_hom(zeta, nu) over a t schedule",
                        "solve one cell problem",
                        "check the structural axioms of a density",
                        "piecewise rigid approximation of a deformation",
                        "recovery sequence along the interfaces of a label field",
                        "strip competitor, slicing certificate and gap report"};
  std::vector<CLI::App *> subs;
  for (int k = 0; k < 6; ++k) {
    auto *s = app.add_subcommand(names[k], help[k]);
    s->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
    s->add_option("--out", out_dir, "output directory");
    s->add_option("--seed", seed, "seed override");
    s->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    subs.push_back(s);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kValidation;
  }

  cli::Options opt;
  for (auto *s : subs) {
    if (!s->parsed()) continue;
    opt.command = s->get_name();
    if (s->count("--seed")) opt.seed = seed;
    if (s->count("--jobs")) opt.jobs = jobs;
  }
  opt.out = out_dir;
  try {
    opt.config = io::read_json(config_path);
  } catch (const std::exception &e) {
    std::cerr << cli::error_json("malformed-config", e.what()).dump() << '\n';
    return cli::kValidation;
  }
  return cli::run(opt);
}
