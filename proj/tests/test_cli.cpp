// Integration tests driving the installed csm binary (path via CSM_BIN).

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "csm/io_util.hpp"

namespace fs = std::filesystem;

namespace {

std::string csm_bin() {
  const char* env = std::getenv("CSM_BIN");
  REQUIRE_MESSAGE(env != nullptr, "CSM_BIN must point at the csm executable");
  return env;
}

struct RunOutput {
  int exit_code = -1;
  std::string stdout_text;
};

RunOutput run(const std::string& args) {
  const auto out_path = fs::temp_directory_path() / "csm_cli_stdout.txt";
  const std::string cmd =
      csm_bin() + " " + args + " > " + out_path.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunOutput result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.stdout_text = csm::read_text_file(out_path.string());
  return result;
}

fs::path write_toy_csv() {
  const auto path = fs::temp_directory_path() / "csm_cli_input.csv";
  std::ofstream out(path);
  out << "id,score,urban,z,y\n";
  // two feasible treated, one far treated, controls around them
  out << "t1,0.10,1,1,5.0\n";
  out << "t2,0.30,0,1,6.0\n";
  out << "t3,9.00,1,1,9.0\n";
  out << "c1,0.12,1,0,3.0\n";
  out << "c2,0.15,1,0,3.4\n";
  out << "c3,0.31,0,0,4.0\n";
  out << "c4,0.35,0,0,4.2\n";
  out << "c5,1.50,1,0,5.0\n";
  return path;
}

std::string base_flags(const fs::path& input, const fs::path& out_dir) {
  return "--input " + input.string() + " --treatment z --outcome y --out " +
         out_dir.string();
}

}  // namespace

TEST_CASE("match writes the long CSV and reports feasibility") {
  const auto input = write_toy_csv();
  const auto dir = fs::temp_directory_path() / "csm_cli_match";
  fs::remove_all(dir);
  const auto res = run("match " + base_flags(input, dir) + " --auto-caliper 5");
  CHECK(res.exit_code == 0);
  CHECK(res.stdout_text.find("feasible") != std::string::npos);
  const auto csv = csm::read_text_file((dir / "match.csv").string());
  CHECK(csv.find("treated_id,control_id,distance,c_t,feasible,method") != std::string::npos);
  CHECK(csv.find("RADIUS") != std::string::npos);
  CHECK(csv.rfind("# csm", 0) == 0);
}

TEST_CASE("estimate end-to-end with scheme and subset controls") {
  const auto input = write_toy_csv();
  const auto dir = fs::temp_directory_path() / "csm_cli_est";
  fs::remove_all(dir);
  const auto res = run("estimate " + base_flags(input, dir) +
                       " --policy adaptive --scheme scm --subset all --json");
  CHECK(res.exit_code == 0);
  CHECK(res.stdout_text.find("SATT") != std::string::npos);
  CHECK(fs::exists(dir / "estimate.txt"));
  CHECK(fs::exists(dir / "estimate.json"));
  CHECK(fs::exists(dir / "weights.csv"));

  const auto res_f = run("estimate " + base_flags(input, dir) +
                         " --policy adaptive --scheme uniform --subset feasible");
  CHECK(res_f.exit_code == 0);
  CHECK(res_f.stdout_text.find("FSATT") != std::string::npos);
}

TEST_CASE("uniform scheme reproduces the simple-average estimator") {
  // Auto caliper: pi.score = (9.0 - 0.1)/5 = 1.78, pi.urban = 1/1000.
  // t1 matches {c1, c2, c5} -> mean 3.8; t2 matches {c3, c4} -> mean 4.1;
  // t3 is infeasible. FSATT = mean(5 - 3.8, 6 - 4.1) = 1.55.
  const auto input = write_toy_csv();
  const auto dir = fs::temp_directory_path() / "csm_cli_avg";
  fs::remove_all(dir);
  const auto res = run("estimate " + base_flags(input, dir) +
                       " --scheme uniform --subset feasible --json");
  CHECK(res.exit_code == 0);
  const auto j = nlohmann::json::parse(
      csm::read_text_file((dir / "estimate.json").string()));
  CHECK(j["tau_hat"].get<double>() == doctest::Approx(1.55).epsilon(1e-12));
  CHECK(j["estimand"] == "FSATT");
  CHECK(j["n_treated_used"] == 2);
}

TEST_CASE("validation failures exit with code 2 and a named cause") {
  const auto dir = fs::temp_directory_path() / "csm_cli_err";
  fs::remove_all(dir);
  const auto missing = run("match --input /nonexistent.csv --treatment z --outcome y --out " +
                           dir.string());
  CHECK(missing.exit_code == 2);

  const auto bad = fs::temp_directory_path() / "csm_cli_bad.csv";
  std::ofstream(bad) << "id,x,z,y\na,0,2,1\nb,1,0,1\n";
  const auto nonbinary =
      run("match --input " + bad.string() + " --treatment z --outcome y --out " + dir.string());
  CHECK(nonbinary.exit_code == 2);
  CHECK(nonbinary.stdout_text.find("NonBinaryTreatment") != std::string::npos);

  const auto conflicting = run("match --input " + bad.string() +
                               " --treatment z --outcome y --caliper-config x.cfg "
                               "--auto-caliper 5 --out " + dir.string());
  CHECK(conflicting.exit_code == 2);
}

TEST_CASE("no-overlap data: fixed policy flags everyone, adaptive matches everyone") {
  const auto input = fs::temp_directory_path() / "csm_cli_noover.csv";
  std::ofstream(input) << "id,x,z,y\nt1,0,1,1\nt2,0.5,1,1\nc1,40,0,0\nc2,41,0,0\n";
  const auto dir = fs::temp_directory_path() / "csm_cli_noover_out";
  fs::remove_all(dir);

  const auto fixed = run("match --input " + input.string() +
                         " --treatment z --outcome y --out " + dir.string());
  CHECK(fixed.exit_code == 0);
  CHECK(fixed.stdout_text.find("feasible (d_t <= c): 0") != std::string::npos);
  // the warning names every infeasible unit
  CHECK(fixed.stdout_text.find("warning") != std::string::npos);
  CHECK(fixed.stdout_text.find("t1") != std::string::npos);
  CHECK(fixed.stdout_text.find("t2") != std::string::npos);

  const auto adaptive = run("match --input " + input.string() +
                            " --treatment z --outcome y --policy adaptive --out " +
                            dir.string());
  CHECK(adaptive.exit_code == 0);
  const auto csv = csm::read_text_file((dir / "match.csv").string());
  CHECK(csv.find("t1,c") != std::string::npos);  // matched despite infeasibility
}

TEST_CASE("diagnose subcommands write their tables") {
  const auto input = write_toy_csv();
  const auto dir = fs::temp_directory_path() / "csm_cli_diag";
  fs::remove_all(dir);
  CHECK(run("diagnose distances " + base_flags(input, dir) + " --k 3 --json").exit_code == 0);
  CHECK(fs::exists(dir / "distances.csv"));
  CHECK(fs::exists(dir / "distance_hist.csv"));
  CHECK(fs::exists(dir / "distance_hist.json"));
  // three ranks present
  const auto hist = csm::read_text_file((dir / "distance_hist.csv").string());
  CHECK(hist.find("\n3,") != std::string::npos);

  CHECK(run("diagnose balance " + base_flags(input, dir) + " --policy adaptive").exit_code == 0);
  CHECK(fs::exists(dir / "balance.csv"));
  CHECK(run("diagnose love " + base_flags(input, dir) + " --policy adaptive").exit_code == 0);
  CHECK(fs::exists(dir / "love.csv"));
  CHECK(run("diagnose frontier " + base_flags(input, dir) + " --policy adaptive").exit_code == 0);
  CHECK(fs::exists(dir / "frontier.csv"));
}

TEST_CASE("reruns are byte-identical, independent of thread count") {
  const auto input = write_toy_csv();
  const auto dir1 = fs::temp_directory_path() / "csm_cli_det1";
  const auto dir2 = fs::temp_directory_path() / "csm_cli_det2";
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  const std::string flags = " --policy adaptive --scheme scm --subset all --json";
  CHECK(run("estimate " + base_flags(input, dir1) + flags + " --threads 1").exit_code == 0);
  CHECK(run("estimate " + base_flags(input, dir2) + flags + " --threads 4").exit_code == 0);
  for (const char* name : {"estimate.txt", "estimate.json", "weights.csv"}) {
    const auto a = csm::read_text_file((dir1 / name).string());
    const auto b = csm::read_text_file((dir2 / name).string());
    CHECK(a == b);
  }

  // simulate subcommand: same seed, same bytes
  const auto sim1 = fs::temp_directory_path() / "csm_cli_sim1";
  const auto sim2 = fs::temp_directory_path() / "csm_cli_sim2";
  fs::remove_all(sim1);
  fs::remove_all(sim2);
  CHECK(run("simulate coverage --trials 2 --seed 5 --out " + sim1.string() +
            " --threads 1").exit_code == 0);
  CHECK(run("simulate coverage --trials 2 --seed 5 --out " + sim2.string() +
            " --threads 3").exit_code == 0);
  CHECK(csm::read_text_file((sim1 / "coverage.csv").string()) ==
        csm::read_text_file((sim2 / "coverage.csv").string()));
}

TEST_CASE("forcing the scalar kernel backend changes nothing, bit for bit") {
  const auto input = write_toy_csv();
  const auto dir1 = fs::temp_directory_path() / "csm_cli_k1";
  const auto dir2 = fs::temp_directory_path() / "csm_cli_k2";
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  const std::string args = " --treatment z --outcome y --policy adaptive";
  CHECK(run("diagnose distances --input " + input.string() + args + " --out " +
            dir1.string()).exit_code == 0);
  {  // same command under CSM_KERNELS=scalar
    const auto out_path = fs::temp_directory_path() / "csm_cli_stdout2.txt";
    const std::string cmd = "CSM_KERNELS=scalar " + csm_bin() + " diagnose distances --input " +
                            input.string() + args + " --out " + dir2.string() + " > " +
                            out_path.string() + " 2>&1";
    CHECK(std::system(cmd.c_str()) == 0);
  }
  CHECK(csm::read_text_file((dir1 / "distances.csv").string()) ==
        csm::read_text_file((dir2 / "distances.csv").string()));
}

TEST_CASE("caliper config file round-trips through the CLI") {
  const auto input = write_toy_csv();
  const auto cfgfile = fs::temp_directory_path() / "csm_cli_caliper.cfg";
  std::ofstream(cfgfile) << "pi.score=2\npi.urban=0.001\nc=1\nalpha=1\npolicy=ADAPTIVE\nnorm=LINF\n";
  const auto dir = fs::temp_directory_path() / "csm_cli_cfg";
  fs::remove_all(dir);
  const auto res = run("match --input " + input.string() +
                       " --treatment z --outcome y --covariates score,urban "
                       "--caliper-config " + cfgfile.string() + " --out " + dir.string());
  CHECK(res.exit_code == 0);
  CHECK(fs::exists(dir / "match.csv"));
}

TEST_CASE("config-file norm is honored unless --norm overrides it") {
  const auto input = write_toy_csv();
  const auto l2cfg = fs::temp_directory_path() / "csm_cli_l2.cfg";
  std::ofstream(l2cfg) << "pi.score=2\npi.urban=0.001\nc=1\nalpha=1\npolicy=FIXED\nnorm=L2\n";
  const auto dir_cfg = fs::temp_directory_path() / "csm_cli_n1";
  const auto dir_flag = fs::temp_directory_path() / "csm_cli_n2";
  const auto dir_linf = fs::temp_directory_path() / "csm_cli_n3";
  fs::remove_all(dir_cfg);
  fs::remove_all(dir_flag);
  fs::remove_all(dir_linf);
  const std::string common = " --treatment z --outcome y --covariates score,urban ";
  CHECK(run("diagnose distances --input " + input.string() + common +
            "--caliper-config " + l2cfg.string() + " --out " + dir_cfg.string())
            .exit_code == 0);
  CHECK(run("diagnose distances --input " + input.string() + common +
            "--caliper-config " + l2cfg.string() + " --norm l2 --out " +
            dir_flag.string()).exit_code == 0);
  CHECK(run("diagnose distances --input " + input.string() + common +
            "--caliper-config " + l2cfg.string() + " --norm linf --out " +
            dir_linf.string()).exit_code == 0);
  auto strip_header = [](const std::string& text) {
    return text.substr(text.find('\n') + 1);  // config hash differs by design
  };
  const auto a = strip_header(csm::read_text_file((dir_cfg / "distances.csv").string()));
  const auto b = strip_header(csm::read_text_file((dir_flag / "distances.csv").string()));
  const auto c = strip_header(csm::read_text_file((dir_linf / "distances.csv").string()));
  CHECK(a == b);   // config norm kept when the flag is absent
  CHECK(a != c);   // explicit flag switches the metric
}
