#include "uci/trainer.hpp"

#include "testutil.hpp"
#include "uci/selfcheck.hpp"

#include "doctest.h"

#include <fstream>
#include <sstream>

using namespace uci;
using test::TempDir;

namespace {

// small corpus + small model so trainer mechanics run in milliseconds
AppConfig desk_test_config(const std::filesystem::path& dir, uint64_t seed = 1) {
    AppConfig cfg;
    cfg.synth.num_domains = 2;
    cfg.synth.videos_per_domain_per_label = 5;
    cfg.synth.frames_per_video = 12;
    cfg.synth.seed = 900;
    cfg.synth.train_frac = 0.6;
    cfg.synth.val_frac = 0.2;

    cfg.train.batch_size = 8;
    cfg.train.learning_rate = 1e-3;
    cfg.train.epochs = 2;
    cfg.train.clip_len = 8;
    cfg.train.seed = seed;
    cfg.train.out_dir = (dir / "run").string();

    cfg.augment.output_size = 64;
    cfg.augment.cutout_side_min = 9;
    cfg.augment.cutout_side_max = 18;

    cfg.model.encoder.stage_channels = {2, 3};
    cfg.model.encoder.stage_strides = {{1, 2}, {2, 2}};
    cfg.model.encoder.out_dim = 32;
    cfg.model.mve.rep_dim = 32;
    cfg.model.mve.views = 8;
    cfg.model.mve.compression = 4;
    cfg.model.attention.heads = 2;
    cfg.model.attention.head_dim = 4;
    cfg.model.attention.in_dim = 8;
    cfg.model.input_size = 64;
    return cfg;
}

AppConfig with_corpus(const TempDir& tmp, uint64_t seed = 1) {
    AppConfig cfg = desk_test_config(tmp.path(), seed);
    cfg.train.manifest = generate_synthetic_dataset(cfg.synth, tmp.path() / "corpus").string();
    return cfg;
}

std::vector<ClipRecord> first_batch(const Trainer& trainer, int batch_size, uint64_t seed) {
    Rng rng(seed);
    return balanced_batches(trainer.train_records(), batch_size, rng).front();
}

std::vector<double> flat_params(ParamRegistry& reg) {
    std::vector<double> out;
    for (const Param* p : reg.items())
        out.insert(out.end(), p->value.begin(), p->value.end());
    return out;
}

} // namespace

TEST_CASE("alpha schedule follows the warm-up") {
    TrainConfig cfg;
    CHECK(alpha_schedule(1, cfg) == 0.1);
    CHECK(alpha_schedule(3, cfg) == 0.1);
    CHECK(alpha_schedule(5, cfg) == 0.1);
    CHECK(alpha_schedule(6, cfg) == 0.5);
    CHECK(alpha_schedule(30, cfg) == 0.5);
    cfg.contrastive = false;
    CHECK(alpha_schedule(1, cfg) == 0.0);
    CHECK(alpha_schedule(10, cfg) == 0.0);
    cfg.contrastive = true;
    CHECK_THROWS_AS(alpha_schedule(0, cfg), ConfigError);
}

TEST_CASE("balanced batches hold equal halves and drop the remainder") {
    auto make_records = [](int n_real, int n_fake) {
        std::vector<ClipRecord> out;
        for (int i = 0; i < n_real + n_fake; ++i) {
            ClipRecord r;
            r.video_id = "v" + std::to_string(i);
            r.label = i < n_real ? 0 : 1;
            r.frame_count = 16;
            out.push_back(r);
        }
        return out;
    };

    SUBCASE("16 + 16 at batch 16 gives two 8+8 batches") {
        Rng rng(1);
        const auto batches = balanced_batches(make_records(16, 16), 16, rng);
        REQUIRE(batches.size() == 2);
        for (const auto& b : batches) {
            REQUIRE(b.size() == 16);
            int real = 0;
            for (const auto& r : b)
                real += r.label == 0 ? 1 : 0;
            CHECK(real == 8);
        }
    }
    SUBCASE("limiting class caps the batch count") {
        Rng rng(1);
        const auto batches = balanced_batches(make_records(16, 8), 16, rng);
        REQUIRE(batches.size() == 1);
        int real = 0;
        for (const auto& r : batches[0])
            real += r.label == 0 ? 1 : 0;
        CHECK(real == 8);
    }
    SUBCASE("identical seeds give identical compositions") {
        Rng a(7), b(7);
        const auto ba = balanced_batches(make_records(12, 12), 8, a);
        const auto bb = balanced_batches(make_records(12, 12), 8, b);
        REQUIRE(ba.size() == bb.size());
        for (size_t i = 0; i < ba.size(); ++i)
            for (size_t j = 0; j < ba[i].size(); ++j)
                CHECK(ba[i][j].video_id == bb[i][j].video_id);
    }
    SUBCASE("an empty class is rejected") {
        Rng rng(1);
        CHECK_THROWS_AS(balanced_batches(make_records(8, 0), 8, rng), ConfigError);
    }
}

TEST_CASE("train config validation rejects zero epochs") {
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.epochs = 1;
    cfg.batch_size = 7;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("alpha zero through the schedule equals the contrastive-off path") {
    TempDir tmp("alpha_zero");
    AppConfig cfg_a = with_corpus(tmp);
    cfg_a.train.contrastive = false;

    AppConfig cfg_b = cfg_a;
    cfg_b.train.contrastive = true;
    cfg_b.train.alpha_warmup = 0.0;
    cfg_b.train.alpha_main = 0.0;

    Trainer ta(cfg_a), tb(cfg_b);
    ta.init();
    tb.init();
    const auto batch = first_batch(ta, 8, 5);
    const LossBreakdown la = ta.train_step(batch, 1);
    const LossBreakdown lb = tb.train_step(batch, 1);
    CHECK(la.l_total == lb.l_total);
    CHECK(la.l_ce == lb.l_ce);
    CHECK(flat_params(ta.params()) == flat_params(tb.params()));
}

TEST_CASE("repeated steps on one batch overfit it") {
    TempDir tmp("overfit");
    AppConfig cfg = with_corpus(tmp);
    cfg.train.contrastive = true;
    cfg.train.learning_rate = 1e-2; // the test model is tiny; this stays stable
    cfg.model.encoder.stage_channels = {4, 8};
    Trainer trainer(cfg);
    trainer.init();
    const auto batch = first_batch(trainer, 8, 9);

    const LossBreakdown first = trainer.train_step(batch, 1);
    LossBreakdown last = first;
    for (int i = 0; i < 49; ++i)
        last = trainer.train_step(batch, 1);
    CHECK(last.l_total < 0.7 * first.l_total);
}

TEST_CASE("identical seeds give byte-identical metrics logs") {
    TempDir tmp_a("det_a"), tmp_b("det_b");
    AppConfig cfg_a = with_corpus(tmp_a, 3);
    AppConfig cfg_b = with_corpus(tmp_b, 3);

    Trainer ta(cfg_a), tb(cfg_b);
    ta.init();
    tb.init();
    const TrainResult ra = ta.run();
    const TrainResult rb = tb.run();
    CHECK(test::file_bytes(ra.metrics_path) == test::file_bytes(rb.metrics_path));
    CHECK(test::file_bytes(ra.val_metrics_path) == test::file_bytes(rb.val_metrics_path));
}

TEST_CASE("metrics log has one line per step") {
    TempDir tmp("metrics_rows");
    AppConfig cfg = with_corpus(tmp);
    cfg.train.epochs = 2;
    Trainer trainer(cfg);
    trainer.init();
    const TrainResult result = trainer.run();

    std::ifstream in(result.metrics_path);
    int lines = 0;
    std::string line;
    int fields = 0;
    while (std::getline(in, line)) {
        ++lines;
        fields = 1;
        for (char c : line)
            fields += c == ',' ? 1 : 0;
        CHECK(fields == 8); // step, epoch, alpha, L_r, L_f, L_in, L_ce, L_total
    }
    // 2 domains x 2 labels x 3 train videos = 6 real + 6 fake -> 1 batch of 8 per epoch
    CHECK(lines == 2);
}

TEST_CASE("resuming from a checkpoint reproduces the continuation exactly") {
    TempDir tmp_full("resume_full"), tmp_part("resume_part");
    AppConfig cfg_full = with_corpus(tmp_full, 11);
    cfg_full.train.epochs = 3;

    Trainer full(cfg_full);
    full.init();
    const TrainResult full_result = full.run();
    REQUIRE(full_result.epochs_run == 3);

    // independent run to epoch 2 in a second directory
    AppConfig cfg_part = cfg_full;
    cfg_part.train.manifest = generate_synthetic_dataset(cfg_part.synth, tmp_part.path() / "corpus").string();
    cfg_part.train.out_dir = (tmp_part.path() / "run").string();
    cfg_part.train.epochs = 2;
    Trainer part(cfg_part);
    part.init();
    part.run();

    // resume it for epoch 3 into a fresh log directory
    AppConfig cfg_resume = cfg_part;
    cfg_resume.train.epochs = 3;
    cfg_resume.train.out_dir = (tmp_part.path() / "resumed").string();
    Trainer resumed(cfg_resume);
    resumed.resume(std::filesystem::path(cfg_part.train.out_dir) / "ckpt-epoch-0002.uci");
    CHECK(resumed.completed_epochs() == 2);
    const TrainResult resumed_result = resumed.run();
    REQUIRE(resumed_result.epochs_run == 3);

    // epoch-3 lines of the full log must equal the resumed log byte for byte
    std::istringstream full_log(test::file_bytes(full_result.metrics_path));
    std::string line, full_epoch3;
    while (std::getline(full_log, line))
        if (line.find(",3,") != std::string::npos)
            full_epoch3 += line + "\n";
    CHECK(full_epoch3 == test::file_bytes(resumed_result.metrics_path));
}

TEST_CASE("domain exclusion removes those records from training") {
    TempDir tmp("exclude");
    AppConfig cfg = with_corpus(tmp);
    cfg.train.exclude_domains = {"B"};
    Trainer trainer(cfg);
    for (const ClipRecord& r : trainer.train_records())
        CHECK(r.domain == "A");
}

TEST_CASE("selfcheck passes and catches an injected BCE sign flip") {
    std::ostringstream sink;
    CHECK(run_selfcheck(sink));

    SelfcheckOptions broken;
    broken.bce_fn = [](double p, int y) { return -bce_loss(p, y); };
    std::ostringstream sink2;
    CHECK_FALSE(run_selfcheck(sink2, broken));
    CHECK(sink2.str().find("[FAIL]") != std::string::npos);
}
