#include <sstream>

#include "doctest.h"
#include "falris/config.hpp"
#include "falris/study.hpp"

using namespace falris;

TEST_CASE("parse key-value text") {
  std::istringstream in("# study settings\nknn.k = 15\nloclogit.grid = 0.5, 1, 2\n\nstudy.methods = knn rf # inline\n"
                        "fa.alpha=0.01\nknn.k = 11\n");
  Config c = Config::parse(in);
  CHECK(c.get_int("knn.k", 0) == 11);
  CHECK(c.get_double("fa.alpha", 0.0) == 0.01);
  CHECK(c.get_doubles("loclogit.grid") == std::vector<double>{0.5, 1.0, 2.0});
  CHECK(c.get_strings("study.methods") == std::vector<std::string>{"knn", "rf"});
  CHECK(c.get_string("missing", "x") == "x");
  CHECK(c.get_bool("missing", true));
  CHECK_FALSE(c.has("missing"));
}

TEST_CASE("malformed config values") {
  std::istringstream no_eq("knn.k 15\n");
  CHECK_THROWS_AS(Config::parse(no_eq), std::invalid_argument);
  Config c;
  c.set("knn.k", "fifteen");
  CHECK_THROWS_AS(c.get_int("knn.k", 0), std::invalid_argument);
  c.set("flag", "maybe");
  CHECK_THROWS_AS(c.get_bool("flag", false), std::invalid_argument);
}

TEST_CASE("study config overrides") {
  std::istringstream in("knn.k = 7\nrf.trees = 50\nann.epochs = 3\nfa.factors = 2\nloclogit.kernel = window\n"
                        "study.systems = 2,3\nstudy.replications = 4\nstudy.n = 90\nstudy.methods = fa-lr-is,knn\n"
                        "sim.rho = 0.5\nsplit.fraction = 0.75\n");
  StudyConfig s;
  apply_config(Config::parse(in), s);
  CHECK(s.settings.knn_k == 7);
  CHECK(s.settings.rf_trees == 50);
  CHECK(s.settings.ann.epochs == 3);
  CHECK(s.settings.falris.fixed_factors == 2);
  CHECK(s.settings.falris.local.kernel == KernelKind::Window);
  CHECK(s.systems == std::vector<int>{2, 3});
  CHECK(s.replications == 4);
  CHECK(s.sim.n == 90);
  CHECK(s.methods == std::vector<Method>{Method::FaLrIs, Method::Knn});
  CHECK(s.sim.rho == 0.5);
  CHECK(s.train_fraction == 0.75);

  Config bad;
  bad.set("knn.kk", "3");
  CHECK_THROWS_AS(apply_config(bad, s), std::invalid_argument);
  Config sys;
  sys.set("study.systems", "5");
  apply_config(sys, s);
  CHECK_THROWS_AS(run_simulation_study(s), std::invalid_argument);
}
