#include "satnn/datasets.hpp"
#include "satnn/errors.hpp"
#include "satnn/pipeline.hpp"

#include <doctest.h>

#include <filesystem>

using namespace satnn;
namespace fs = std::filesystem;

namespace {

struct Setup {
    Dataset ds = perceptron_toyset();
    NetworkSpec net;
    Hyperparams hp;
    SolverConfig cfg;
    TrainOptions opt;

    Setup() {
        net.input_dim = 4;
        hp.margin_rule = MarginRule::Stated;
        hp.batch_size = 8;
        hp.num_batches = 2;
        cfg.seed = 3;
        cfg.timeout_secs = 30;
        opt.use_assumptions = false;
        opt.holdout = ds;
        for (Curriculum* c : {&opt.learn_curriculum, &opt.solve_curriculum}) {
            c->iterations_per_round = 2;
            c->max_rounds = 2;
            c->min_chunk = 4;
        }
    }
};

} // namespace

TEST_CASE("train a linear model on the perceptron set") {
    Setup s;
    const TrainResult r = train(s.ds, s.net, s.hp, s.cfg, s.opt);
    REQUIRE_FALSE(r.failed());
    REQUIRE(r.batches.size() == 2);
    for (const auto& b : r.batches) {
        CHECK(b.phase2_status == "sat");
        CHECK(b.indices.size() == 8);
        CHECK(b.models_found == 1);
    }
    for (const auto& m : r.models) {
        CHECK(m.train_margin == 1.0);
        REQUIRE(m.holdout_accuracy);
    }
    CHECK(r.models[0].holdout_accuracy >= r.models[1].holdout_accuracy);

    const TrainResult again = train(s.ds, s.net, s.hp, s.cfg, s.opt);
    CHECK(again.manifest_json == r.manifest_json);
    CHECK(again.models[0].model == r.models[0].model);
}

TEST_CASE("train with clause sharing and assumption solving") {
    Setup s;
    s.opt.share_clauses = true;
    s.opt.use_assumptions = true;
    s.opt.solutions_per_batch = 2;
    const TrainResult r = train(s.ds, s.net, s.hp, s.cfg, s.opt);
    CHECK(r.batches[0].learn_stats);
    CHECK(r.manifest_json.find("\"share_clauses\": true") != std::string::npos);
    for (const auto& m : r.models) CHECK(m.train_margin == 1.0);
}

TEST_CASE("an unsatisfiable batch yields no model") {
    Setup s;
    s.hp.margin_rule = MarginRule::Literal;
    s.hp.num_batches = 1;
    const TrainResult r = train(s.ds, s.net, s.hp, s.cfg, s.opt);
    CHECK(r.failed());
    CHECK(r.batches[0].phase2_status == "unsat");
}

TEST_CASE("train rejects bad input") {
    Setup s;
    s.net.input_dim = 5;
    CHECK_THROWS_AS(train(s.ds, s.net, s.hp, s.cfg, s.opt), ShapeError);
    Setup e;
    e.ds.examples.clear();
    CHECK_THROWS_AS(train(e.ds, e.net, e.hp, e.cfg, e.opt), ConfigError);
    Setup big;
    big.hp.batch_size = 17;
    CHECK_THROWS_AS(train(big.ds, big.net, big.hp, big.cfg, big.opt), ConfigError);
}

TEST_CASE("write_run, evaluate and report") {
    Setup s;
    s.opt.config_name = "toy";
    const TrainResult r = train(s.ds, s.net, s.hp, s.cfg, s.opt);
    const fs::path dir = fs::temp_directory_path() / "satnn_pipeline_run";
    fs::remove_all(dir);
    write_run(r, "toy", dir);
    CHECK(fs::exists(dir / "toy.manifest.json"));
    CHECK(fs::exists(dir / "toy.timings.json"));
    CHECK(fs::exists(dir / r.models[0].file_name));

    std::vector<TrainedModel> models;
    for (const auto& m : r.models) models.push_back(m.model);
    const EvalReport rep = evaluate(models, s.ds);
    CHECK(rep.accuracies.size() == 2);
    CHECK(rep.min <= rep.median);
    CHECK(rep.median <= rep.max);

    const fs::path manifests[] = {dir / "toy.manifest.json"};
    const auto rows = report_from_manifests(manifests);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].first == "toy");
    CHECK(rows[0].second.max == doctest::Approx(rep.max));
    CHECK_THROWS_AS(evaluate({}, s.ds), ConfigError);
}

TEST_CASE("summaries") {
    const EvalReport r = summarize({0.5, 0.9, 0.7, 0.6});
    CHECK(r.min == 0.5);
    CHECK(r.median == 0.6);
    CHECK(r.max == 0.9);
    CHECK(format_eval_row("cfg", r) == "cfg,50.00,60.00,90.00");
    CHECK(summarize({}).accuracies.empty());
}
