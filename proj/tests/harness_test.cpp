#include "mtr/harness/runner.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "mtr/harness/manifest.hpp"
#include "mtr/harness/plan.hpp"
#include "mtr/harness/svg.hpp"
#include "mtr/harness/toytask.hpp"
#include "mtr/model/checkpoint.hpp"
#include "mtr/model/translate.hpp"
#include "mtr/util/error.hpp"
#include "mtr/util/io.hpp"

using namespace mtr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
    std::string sub(const std::string& name) const { return (path / name).string(); }
};

ToySpec micro_spec() {
    ToySpec spec;
    spec.lexicon = 14;
    spec.train_sentences = 24;
    spec.val_sentences = 8;
    spec.test_sentences = 8;
    spec.min_words = 2;
    spec.max_words = 4;
    spec.seed = 9;
    return spec;
}

std::string micro_plan(const std::string& kind, const std::string& data_dir,
                       const std::string& out_dir, const std::string& extra) {
    std::string p;
    p += "kind = " + kind + "\n";
    p += "data.train_src = " + data_dir + "/train.src\n";
    p += "data.train_tgt = " + data_dir + "/train.tgt\n";
    p += "data.val_src = " + data_dir + "/val.src\n";
    p += "data.val_tgt = " + data_dir + "/val.tgt\n";
    p += "data.test_src = " + data_dir + "/test.src\n";
    p += "data.test_tgt = " + data_dir + "/test.tgt\n";
    p += "model.d_model = 16\nmodel.d_ffn = 32\nmodel.heads = 2\n";
    p += "model.enc_layers = 1\nmodel.dec_layers = 1\nmodel.dropout = 0.0\n";
    p += "model.max_positions = 128\nmodel.norm_placement = pre\n";
    p += "train.epochs = 2\ntrain.batch_tokens = 256\ntrain.warmup_steps = 8\n";
    p += "train.lr = 0.001\n";
    p += "out.dir = " + out_dir + "\n";
    p += "seed = 5\n";
    p += extra;
    return p;
}

double svg_attr(const std::string& svg, size_t from, const std::string& name) {
    size_t at = svg.find(name + "=\"", from);
    REQUIRE(at != std::string::npos);
    at += name.size() + 2;
    return std::stod(svg.substr(at));
}

}  // namespace

TEST_CASE("the toy cipher is reversible and deterministic") {
    CHECK(cipher_line("abc xyz") == "hij efg");
    CHECK(cipher_line("hello world") == "olssv dvysk");
    CHECK(decipher_line(cipher_line("the quick brown fox")) == "the quick brown fox");

    ToyDataset a = make_toy_dataset(micro_spec());
    ToyDataset b = make_toy_dataset(micro_spec());
    CHECK(a.train_src == b.train_src);
    CHECK(a.test_tgt == b.test_tgt);
    CHECK(a.train_src.size() == 24);
    CHECK(a.val_src.size() == 8);
    for (size_t i = 0; i < a.train_src.size(); ++i) {
        CHECK(a.train_tgt[i] == cipher_line(a.train_src[i]));
        CHECK(a.train_src[i] != a.train_tgt[i]);  // the cipher actually moves letters
    }

    ToySpec other = micro_spec();
    other.seed = 10;
    CHECK(make_toy_dataset(other).train_src != a.train_src);

    TempDir dir("mtr_toy_files");
    std::vector<std::string> paths = write_toy_dataset(dir.str(), micro_spec());
    REQUIRE(paths.size() == 6);
    CHECK(read_lines(paths[0]) == a.train_src);
    CHECK(read_lines(paths[5]) == a.test_tgt);

    CHECK_THROWS_AS(make_toy_dataset(ToySpec{.lexicon = 1}), Error);
}

TEST_CASE("segmentation levels parse and name themselves") {
    CHECK(parse_seg_level("char").character);
    CHECK(parse_seg_level("char").name() == "char");
    SegLevel bpe = parse_seg_level("bpe:40");
    CHECK(!bpe.character);
    CHECK(bpe.merges == 40);
    CHECK(bpe.name() == "bpe40");
    CHECK_THROWS_AS(parse_seg_level("bpe:0"), Error);
    CHECK_THROWS_AS(parse_seg_level("bpe:x"), Error);
    CHECK_THROWS_AS(parse_seg_level("bpe:4x"), Error);
    CHECK_THROWS_AS(parse_seg_level("word"), Error);
}

TEST_CASE("plans parse with defaults and reject junk") {
    TempDir dir("mtr_plan_parse");
    write_toy_dataset(dir.str(), micro_spec());
    std::string text = micro_plan("noise-sweep", dir.str(), dir.sub("out"),
                                  "seg.levels = char bpe:12\nnoise.kind = replace\n");
    ExperimentPlan p = parse_plan_text(text);
    CHECK(p.kind == PlanKind::NoiseSweep);
    CHECK(p.seg_levels.size() == 2);
    CHECK(p.seg_levels[1].merges == 12);
    CHECK(p.noise_kind == NoiseKind::Replace);
    REQUIRE(p.noise_levels.size() == 10);  // defaults to the full 1..10 sweep
    CHECK(p.noise_levels.front() == 1);
    CHECK(p.noise_levels.back() == 10);
    CHECK(p.matrix_kinds.size() == 4);
    CHECK(p.train_noise_p == 0.05);
    CHECK(p.lm_order == 5);
    CHECK(p.beam_width == 1);
    CHECK(p.halt_on_error);
    CHECK(p.model.d_model == 16);
    CHECK(p.train.epochs == 2);
    validate_plan(p);

    CHECK_THROWS_AS(parse_plan_text("kind = banana\nout.dir = x\n"), Error);
    CHECK_THROWS_AS(parse_plan_text(text + "mystery.key = 1\n"), Error);
    CHECK_THROWS_AS(parse_plan_text(text + "noise.levels = 11\n"), Error);
    CHECK_THROWS_AS(validate_plan(parse_plan_text(text + "noise.levels = 3 1\n")), Error);

    ExperimentPlan missing = p;
    missing.test_src = dir.sub("nope.src");
    CHECK_THROWS_AS(validate_plan(missing), Error);
    ExperimentPlan nolevels = p;
    nolevels.seg_levels.clear();
    CHECK_THROWS_AS(validate_plan(nolevels), Error);
}

TEST_CASE("plan hashes pin the semantic fields") {
    TempDir dir("mtr_plan_hash");
    write_toy_dataset(dir.str(), micro_spec());
    std::string text =
        micro_plan("vocab-sweep", dir.str(), dir.sub("out"), "seg.levels = char\n");
    ExperimentPlan a = parse_plan_text(text);
    ExperimentPlan b = parse_plan_text(text);
    CHECK(plan_hash(a) == plan_hash(b));
    CHECK(plan_hash(a).size() == 16);

    b.seed = 99;
    CHECK(plan_hash(a) != plan_hash(b));
    b = a;
    b.seg_levels.push_back(parse_seg_level("bpe:8"));
    CHECK(plan_hash(a) != plan_hash(b));
    b = a;
    b.out_dir = dir.sub("elsewhere");  // execution detail, not semantics
    CHECK(plan_hash(a) == plan_hash(b));
}

TEST_CASE("manifests round-trip through JSON and stay finite") {
    TempDir dir("mtr_manifest");
    RunManifest m;
    m.plan_hash = "00ff00ff00ff00ff";
    m.kind = "vocab-sweep";
    m.complete = false;
    m.cells["char"] = {"done", "char", "", {{"bleu", 31.25}, {"val_ppl", 2.5}}};
    m.cells["bpe8"] = {"failed", "", "exploded", {}};

    std::string path = dir.sub("manifest.json");
    save_manifest(path, m);
    CHECK(!fs::exists(path + ".tmp"));
    RunManifest r = load_manifest(path);
    CHECK(r.plan_hash == m.plan_hash);
    CHECK(r.kind == m.kind);
    CHECK(r.complete == false);
    REQUIRE(r.cells.size() == 2);
    CHECK(r.cells["char"].done());
    CHECK(r.cells["char"].metrics.at("bleu") == 31.25);
    CHECK(r.cells["bpe8"].status == "failed");
    CHECK(r.cells["bpe8"].error == "exploded");

    RunManifest bad = m;
    bad.cells["char"].metrics["bleu"] = std::nan("");
    CHECK_THROWS_AS(save_manifest(dir.sub("bad.json"), bad), Error);

    write_file(dir.sub("junk.json"), "{not json");
    CHECK_THROWS_AS(load_manifest(dir.sub("junk.json")), Error);
    write_file(dir.sub("empty.json"), "{}");
    CHECK_THROWS_AS(load_manifest(dir.sub("empty.json")), Error);
}

TEST_CASE("fitted lines render at the data-mapped endpoints") {
    // collinear series: bleu = 50 - 100 * p
    Series s{"char", {}};
    for (int k = 1; k <= 10; ++k) {
        double p = k / 100.0;
        s.points.emplace_back(p, 50.0 - 100.0 * p);
    }
    Chart chart = line_chart("t", "p", "BLEU", {s}, {{"char fit", -100.0, 50.0}});
    size_t at = chart.svg.find("class=\"fit\"");
    REQUIRE(at != std::string::npos);
    double x1 = svg_attr(chart.svg, at, "x1");
    double y1 = svg_attr(chart.svg, at, "y1");
    double x2 = svg_attr(chart.svg, at, "x2");
    double y2 = svg_attr(chart.svg, at, "y2");
    CHECK(std::fabs(x1 - chart.geom.x_of(0.01)) <= 1.0);
    CHECK(std::fabs(y1 - chart.geom.y_of(49.0)) <= 1.0);
    CHECK(std::fabs(x2 - chart.geom.x_of(0.10)) <= 1.0);
    CHECK(std::fabs(y2 - chart.geom.y_of(40.0)) <= 1.0);

    // the polyline endpoints coincide with the fit on collinear data
    size_t pl = chart.svg.find("<polyline");
    REQUIRE(pl != std::string::npos);
    size_t open = chart.svg.find("points=\"", pl) + 8;
    CHECK(std::fabs(std::stod(chart.svg.substr(open)) - x1) <= 1.0);

    Chart bars = bar_chart("b", "beta", {"char", "bpe40"}, {-20.0, -120.0});
    size_t rects = 0;
    for (size_t pos = bars.svg.find("<rect"); pos != std::string::npos;
         pos = bars.svg.find("<rect", pos + 1)) {
        ++rects;
    }
    CHECK(rects == 3);  // background + one bar per label
    CHECK_THROWS_AS(line_chart("t", "x", "y", {}), Error);
    CHECK_THROWS_AS(bar_chart("t", "y", {"a"}, {1.0, 2.0}), Error);
}

TEST_CASE("cell ids enumerate the factor product in report order") {
    ExperimentPlan p;
    p.seg_levels = {parse_seg_level("char"), parse_seg_level("bpe:8")};

    p.kind = PlanKind::VocabSweep;
    CHECK(plan_cell_ids(p) == std::vector<std::string>{"char", "bpe8"});

    p.kind = PlanKind::MatchedNoiseMatrix;
    p.matrix_kinds = {NoiseKind::Delete, NoiseKind::Replace};
    p.seg_levels = {parse_seg_level("char")};
    CHECK(plan_cell_ids(p) == std::vector<std::string>{"char.train-clean", "char.train-delete",
                                                       "char.train-replace"});

    p.kind = PlanKind::DomainReport;
    p.tests = {"a", "b"};
    CHECK(plan_cell_ids(p) == std::vector<std::string>{"test00", "test01"});

    p.kind = PlanKind::DepthSweep;
    p.depths = {1, 2};
    CHECK(plan_cell_ids(p) == std::vector<std::string>{"d1.plain", "d1.transparent", "d2.plain",
                                                       "d2.transparent"});
}

TEST_CASE("a vocab sweep runs, resumes, and reproduces its reports") {
    TempDir data("mtr_vs_data");
    write_toy_dataset(data.str(), micro_spec());
    TempDir out("mtr_vs_out");
    fs::remove_all(out.path);  // run_plan wants to create it

    std::string text = micro_plan("vocab-sweep", data.str(), out.str(),
                                  "seg.levels = char bpe:12\n");
    ExperimentPlan plan = parse_plan_text(text);

    RunOptions opts;
    opts.jobs = 2;
    RunManifest m = run_plan(plan, opts);
    CHECK(m.complete);
    REQUIRE(m.cells.size() == 2);
    for (const std::string id : {"char", "bpe12"}) {
        const CellResult& c = m.cells.at(id);
        CHECK(c.done());
        CHECK(c.metrics.at("bleu") >= 0.0);
        CHECK(c.metrics.at("val_ppl") > 1.0);
        CHECK(c.metrics.at("src_vocab") > 5.0);
        CHECK(fs::exists(out.path / "checkpoints" / (id + ".ckpt")));
    }
    REQUIRE(fs::exists(out.path / "csv" / "vocab_sweep.csv"));
    REQUIRE(fs::exists(out.path / "svg" / "bleu_by_vocab.svg"));
    std::string csv = read_file((out.path / "csv" / "vocab_sweep.csv").string());
    CHECK(csv.rfind("level,src_vocab,tgt_vocab,dropout,lr,val_ppl,bleu\nchar,", 0) == 0);

    // a saved checkpoint is a complete translation model
    Checkpoint ckpt = load_checkpoint((out.path / "checkpoints" / "char.ckpt").string());
    Transformer restored = ckpt.restore();
    std::string hyp = translate_line(restored, ckpt.assets, "abc");
    CHECK(hyp.size() < 200);  // decodes and terminates

    // the same directory cannot be reused without resuming
    CHECK_THROWS_AS(run_plan(plan, {}), Error);

    // resuming a finished run re-emits the same bytes
    RunOptions resume;
    resume.resume = true;
    RunManifest again = run_plan(plan, resume);
    CHECK(again.complete);
    CHECK(read_file((out.path / "csv" / "vocab_sweep.csv").string()) == csv);

    // resuming under a different plan is refused
    ExperimentPlan other = plan;
    other.seed = 6;
    CHECK_THROWS_AS(run_plan(other, resume), Error);

    // an independent run of the same plan produces byte-identical reports
    TempDir out2("mtr_vs_out2");
    fs::remove_all(out2.path);
    ExperimentPlan rerun = plan;
    rerun.out_dir = out2.str();
    run_plan(rerun, {});
    CHECK(read_file((out2.path / "csv" / "vocab_sweep.csv").string()) == csv);
}

TEST_CASE("a noise sweep fits sensitivity and flags degenerate sweeps") {
    TempDir data("mtr_ns_data");
    write_toy_dataset(data.str(), micro_spec());
    TempDir out("mtr_ns_out");
    fs::remove_all(out.path);

    std::string text = micro_plan("noise-sweep", data.str(), out.str(),
                                  "seg.levels = char\nnoise.kind = replace\n"
                                  "noise.levels = 0 5 10\n");
    ExperimentPlan plan = parse_plan_text(text);
    RunManifest m = run_plan(plan, {});
    CHECK(m.complete);
    const CellResult& c = m.cells.at("char");
    CHECK(c.metrics.count("bleu.p00"));
    CHECK(c.metrics.count("bleu.p05"));
    CHECK(c.metrics.count("bleu.p10"));
    CHECK(c.metrics.count("beta"));
    CHECK(c.metrics.at("r2") >= 0.0);

    std::string csv = read_file((out.path / "csv" / "noise_sweep.char.csv").string());
    CHECK(csv.rfind("percent,p,bleu,beta,alpha,r2\n0,0.0000,", 0) == 0);
    CHECK(csv.find("\nfit,,,") != std::string::npos);
    CHECK(fs::exists(out.path / "csv" / "sensitivity.csv"));
    CHECK(fs::exists(out.path / "svg" / "bleu_vs_p.svg"));
    CHECK(fs::exists(out.path / "svg" / "beta_by_vocab.svg"));

    // a single-level sweep cannot support the fit; the error is recorded
    TempDir out2("mtr_ns_deg");
    fs::remove_all(out2.path);
    std::string deg_text = micro_plan("noise-sweep", data.str(), out2.str(),
                                      "seg.levels = char\nnoise.levels = 0\n");
    ExperimentPlan deg = parse_plan_text(deg_text);
    RunManifest dm = run_plan(deg, {});
    CHECK(!dm.complete);
    CHECK(dm.cells.at("char").status == "failed");
    CHECK(dm.cells.at("char").error.find("at least two") != std::string::npos);
    CHECK_THROWS_AS(emit_report(deg, dm), Error);
}

TEST_CASE("a matched-noise matrix trains per row and scores every column") {
    TempDir data("mtr_mx_data");
    write_toy_dataset(data.str(), micro_spec());
    TempDir out("mtr_mx_out");
    fs::remove_all(out.path);

    std::string text = micro_plan("matched-noise", data.str(), out.str(),
                                  "seg.levels = char\nnoise.kinds = delete replace\n"
                                  "train.epochs = 1\n");
    // micro_plan already sets train.epochs; strip the duplicate line
    text.erase(text.find("train.epochs = 2\n"), 17);
    ExperimentPlan plan = parse_plan_text(text);
    RunManifest m = run_plan(plan, {});
    CHECK(m.complete);
    REQUIRE(m.cells.size() == 3);
    for (const std::string id :
         {"char.train-clean", "char.train-delete", "char.train-replace"}) {
        const CellResult& c = m.cells.at(id);
        CHECK(c.done());
        CHECK(c.metrics.count("bleu.clean"));
        CHECK(c.metrics.count("bleu.delete"));
        CHECK(c.metrics.count("bleu.replace"));
    }
    std::string csv = read_file((out.path / "csv" / "matched_noise.char.csv").string());
    CHECK(csv.rfind("train,clean,delete,replace\nclean,", 0) == 0);
    CHECK(fs::exists(out.path / "svg" / "matched_noise.char.svg"));
}

TEST_CASE("a domain report measures similarity to the training corpus") {
    TempDir dir("mtr_dr_data");
    std::vector<std::string> train = {"the cat sat", "a dog ran", "the dog sat",
                                      "one rare word", "another rare token"};
    write_lines(dir.sub("train.txt"), train);
    write_lines(dir.sub("same.txt"), train);
    write_lines(dir.sub("new.txt"), {"completely novel words", "entirely fresh phrasing"});
    TempDir out("mtr_dr_out");
    fs::remove_all(out.path);

    std::string text;
    text += "kind = domain-report\n";
    text += "data.train_src = " + dir.sub("train.txt") + "\n";
    text += "data.tests = " + dir.sub("same.txt") + " " + dir.sub("new.txt") + "\n";
    text += "lm.order = 3\n";
    text += "out.dir = " + out.str() + "\n";
    ExperimentPlan plan = parse_plan_text(text);
    RunManifest m = run_plan(plan, {});
    CHECK(m.complete);
    const CellResult& same = m.cells.at("test00");
    CHECK(same.label == "same.txt");
    CHECK(same.metrics.at("sentences") == 5.0);
    CHECK(same.metrics.at("unseen_pct") == 0.0);  // the training data itself
    CHECK(same.metrics.at("kn_ppl") > 1.0);
    const CellResult& fresh = m.cells.at("test01");
    CHECK(fresh.metrics.at("unseen_pct") == 100.0);
    CHECK(fresh.metrics.at("kn_ppl") > same.metrics.at("kn_ppl"));

    std::string csv = read_file((out.path / "csv" / "domain_report.csv").string());
    CHECK(csv.rfind("test_set,sentences,unseen_pct,kn_ppl\nsame.txt,5,0.0000,", 0) == 0);
    CHECK(csv.find("\nnew.txt,2,100.0000,") != std::string::npos);
}

TEST_CASE("a depth sweep trains plain and transparent variants per depth") {
    TempDir data("mtr_ds_data");
    write_toy_dataset(data.str(), micro_spec());
    TempDir out("mtr_ds_out");
    fs::remove_all(out.path);

    std::string text = micro_plan("depth-sweep", data.str(), out.str(),
                                  "seg.levels = char\ndepth.list = 1 2\n");
    text.erase(text.find("train.epochs = 2\n"), 17);
    text += "train.epochs = 1\n";
    ExperimentPlan plan = parse_plan_text(text);
    RunManifest m = run_plan(plan, {});
    CHECK(m.complete);
    REQUIRE(m.cells.size() == 4);
    CHECK(m.cells.at("d2.transparent").metrics.at("transparent") == 1.0);
    CHECK(m.cells.at("d2.plain").metrics.at("depth") == 2.0);

    std::string csv = read_file((out.path / "csv" / "depth_sweep.csv").string());
    CHECK(csv.rfind("depth,variant,dropout,lr,val_ppl,bleu\n1,plain,", 0) == 0);
    CHECK(csv.find("\n2,transparent,") != std::string::npos);
    CHECK(fs::exists(out.path / "svg" / "bleu_vs_depth.svg"));
}
