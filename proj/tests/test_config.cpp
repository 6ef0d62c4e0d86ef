#include <gtest/gtest.h>

#include <fstream>

#include "fblab/config.hpp"
#include "fblab/experiments.hpp"
#include "fblab/io.hpp"

using namespace fblab;

namespace {
const char* no_env(const char*) { return nullptr; }

ExperimentConfig cfg_from(const std::string& text, std::optional<Experiment> sel = std::nullopt) {
  return make_config(parse_config_text(text), sel, no_env);
}

int error_line(const std::string& text) {
  try {
    cfg_from(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("fblab_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}
}  // namespace

TEST(Parse, SectionsCommentsAndLines) {
  const auto doc = parse_config_text("experiment = solve  # trailing\n\n[grid]\nns = 9 ; other\n  nt=11\n");
  EXPECT_EQ(doc.entries.at("experiment").value, "solve");
  EXPECT_EQ(doc.entries.at("grid.ns").value, "9");
  EXPECT_EQ(doc.entries.at("grid.nt").value, "11");
  EXPECT_EQ(doc.line_of("grid.nt"), 5);
  EXPECT_EQ(doc.line_of("missing"), 0);
}

TEST(Parse, ErrorsCarryLineNumbers) {
  EXPECT_EQ(error_line("experiment = profile\nthis line has no equals\n"), 2);
  EXPECT_EQ(error_line("experiment = profile\nn = 3\nn = 4\n"), 3);
  EXPECT_EQ(error_line("experiment = profile\n[grid\n"), 2);
  EXPECT_EQ(error_line("experiment = profile\n\nbogus = 1\n"), 3);
  EXPECT_EQ(error_line("experiment = profile\nn = three\n"), 2);
  EXPECT_EQ(error_line("experiment = profile\nn = 1\n"), 2);
  EXPECT_EQ(error_line("experiment = nonsense\n"), 1);
  EXPECT_EQ(error_line("experiment = profile\n[tolerances]\nnewton = -1\n"), 3);
  EXPECT_EQ(error_line("experiment = profile\n[tolerances]\nwhatever = 1\n"), 3);
  EXPECT_EQ(error_line("experiment = profile\nreaction = table:/no/such/file.csv\n"), 2);
  EXPECT_EQ(error_line("experiment = profile\n[probe]\ncutoff = square\n"), 3);
  EXPECT_EQ(error_line("n = 3\n"), 0);
}

TEST(Config, DefaultsAndSelection) {
  const auto c = cfg_from("", Experiment::window);
  EXPECT_EQ(c.experiment, Experiment::window);
  EXPECT_EQ(c.n, 3);
  for (const auto& [name, v] : default_tolerances()) EXPECT_EQ(c.tolerances.at(name), v);
  EXPECT_EQ(c.echo.at("experiment"), "window");
  EXPECT_THROW(cfg_from("experiment = solve\n", Experiment::profile), ConfigError);
  EXPECT_EQ(cfg_from("experiment = solve\n", Experiment::solve).experiment, Experiment::solve);
}

TEST(Config, EnvironmentOverridesTolerances) {
  const auto env = [](const char* name) -> const char* {
    return std::string(name) == "FBLAB_TOL_NEWTON" ? "1e-7" : nullptr;
  };
  const auto c = make_config(parse_config_text("experiment = solve\n[tolerances]\nnewton = 1e-9\nspectral = 1e-6\n"),
                             std::nullopt, env);
  EXPECT_EQ(c.tolerances.at("newton"), 1e-7);
  EXPECT_EQ(c.tolerances.at("spectral"), 1e-6);
  EXPECT_EQ(c.echo.at("tolerances.newton"), io::fmt(1e-7));
  const auto bad = [](const char* name) -> const char* {
    return std::string(name) == "FBLAB_TOL_MASS" ? "lots" : nullptr;
  };
  EXPECT_THROW(make_config(parse_config_text("experiment = solve\n"), std::nullopt, bad), ConfigError);
  const auto neg = [](const char* name) -> const char* {
    return std::string(name) == "FBLAB_TOL_MASS" ? "-1" : nullptr;
  };
  EXPECT_THROW(make_config(parse_config_text("experiment = solve\n"), std::nullopt, neg), ConfigError);
}

TEST(Config, ReactionTableMustExistAndLoads) {
  const auto dir = scratch("table");
  std::filesystem::create_directories(dir);
  const auto b = make_polynomial_beta();
  {
    std::ofstream f(dir / "beta.csv");
    f << io::reaction_csv(tabulate(b, 0.0, 1.0, 401));
  }
  const auto c = cfg_from("experiment = profile\nreaction = table:" + (dir / "beta.csv").string() + "\n");
  const auto tab = make_reaction(c);
  for (double t : {0.1, 0.5, 0.8}) EXPECT_NEAR(tab.eval(t), b.eval(t), 1e-6);
  EXPECT_THROW(load_config(dir / "absent.cfg"), ConfigError);
}

TEST(Config, HashIsStableAndSensitive) {
  const auto a = cfg_from("experiment = profile\n[profile]\na = 2\n");
  const auto b = cfg_from("experiment=profile  # same\n\n[profile]\n  a = 2\n");
  const auto c = cfg_from("experiment = profile\n[profile]\na = 3\n");
  EXPECT_EQ(fnv1a(canonical_echo(a.echo)), fnv1a(canonical_echo(b.echo)));
  EXPECT_NE(fnv1a(canonical_echo(a.echo)), fnv1a(canonical_echo(c.echo)));
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
}

TEST(Io, BinaryFieldRoundTrip) {
  const AxiGrid g{4, 5, 7, 2.0, -1.0, 3.0};
  const auto u = AxiField::from_function(g, [](double s, double t) { return std::sin(s) * std::exp(t) + 1e-300; });
  const auto bytes = io::field_binary(u);
  EXPECT_EQ(bytes.substr(0, 8), "FBLFIELD");
  EXPECT_EQ(bytes.size(), 8 + 3 * 8 + 5 * 8 + g.size() * 8);
  const auto v = io::read_field_binary(bytes);
  EXPECT_TRUE(v.grid.same_as(g));
  EXPECT_EQ(v.values, u.values);
  EXPECT_THROW(io::read_field_binary("NOTFIELD"), Error);
}

TEST(Io, CsvIsFullPrecision) {
  EXPECT_EQ(std::stod(io::fmt(0.1)), 0.1);
  EXPECT_EQ(std::stod(io::fmt(1.0 / 3.0)), 1.0 / 3.0);
  const AxiGrid g{3, 3, 3, 1.0, 0.0, 1.0};
  const auto csv = io::field_csv(AxiField(g, 0.5));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "s,t,u");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 10);
}

TEST(Run, ProfileReportsCaseOneLaw) {
  const auto out = run(cfg_from("experiment = profile\n[profile]\na = 2\n"));
  const auto& res = out.report["results"];
  EXPECT_EQ(res["classification"]["case"], "case_i");
  EXPECT_LE(res["case_i_law_defect"].get<double>(), 1e-6);
  EXPECT_NEAR(res["classification"]["b"].get<double>(), std::sqrt(3.0), 1e-8);
  EXPECT_TRUE(out.files.files.count("report.json"));
  EXPECT_TRUE(out.files.files.count("profile.csv"));
  EXPECT_EQ(out.report["provenance"]["version"], FBLAB_VERSION);
  EXPECT_EQ(out.report["provenance"]["config_hash"].get<std::string>().size(), 16u);
}

TEST(Run, WindowForDimensionSixIsEmpty) {
  const auto out = run(cfg_from("experiment = window\n[window]\ndimensions = 5, 6\n"));
  const auto& rows = out.report["results"]["window"];
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1]["admissible interval"], "empty");
  EXPECT_EQ(rows[0]["admissible interval"][0].get<double>(), 1.5);
  EXPECT_EQ(rows[0]["admissible interval"][1].get<double>(), std::sqrt(3.0));
}

TEST(Run, ResultsAreBitwiseReproducible) {
  set_threads(1);
  const std::string text =
      "experiment = stability\nn = 4\n[grid]\nns = 25\nnt = 25\ns_max = 4\nt_min = -4\nt_max = 4\n";
  const auto a = run(cfg_from(text));
  const auto b = run(cfg_from(text));
  EXPECT_EQ(a.report["results"].dump(), b.report["results"].dump());
  EXPECT_EQ(a.report["provenance"].dump(), b.report["provenance"].dump());
  for (const auto& [name, content] : a.files.files)
    if (name != "report.json") EXPECT_EQ(content, b.files.files.at(name)) << name;
}

TEST(Run, ModuleErrorsNameTheOperation) {
  // a = 0.5 on a very short domain cannot be classified.
  try {
    run(cfg_from("experiment = profile\n[profile]\na = 0.5\nhalfwidth = 0.5\n"));
    FAIL() << "expected an error";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("classify"), std::string::npos) << e.what();
  }
}

TEST(Output, CommitWritesEverything) {
  const auto dir = scratch("commit");
  io::OutputBundle b;
  b.add("x.csv", "1,2\n");
  b.add("report.json", "{}\n");
  b.commit(dir / "nested");
  EXPECT_EQ(io::read_text(dir / "nested" / "x.csv"), "1,2\n");
  EXPECT_TRUE(std::filesystem::exists(dir / "nested" / "report.json"));
}
