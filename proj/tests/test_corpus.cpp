#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "eegcn/corpus.hpp"
#include "eegcn/util.hpp"
#include "test_support.hpp"

using namespace eegcn;
using namespace eegcn::corpus;
using testing::TempDir;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("load a single example") {
  TempDir dir;
  auto p = dir.write("one.jsonl", R"({"tokens": ["the", "soup", "was"], "aspect_start": 2, "aspect_len": 1, "label": "negative"})"
                                  "\n");
  auto ex = load_examples(p);
  REQUIRE(ex.size() == 1);
  CHECK(ex[0].tokens == std::vector<std::string>{"the", "soup", "was"});
  CHECK(ex[0].aspect_start == 2);
  CHECK(ex[0].aspect_len == 1);
  CHECK(ex[0].label == Sentiment::negative);
  CHECK_FALSE(ex[0].parse.has_value());
}

TEST_CASE("example errors carry line numbers") {
  TempDir dir;
  const std::string good = R"({"tokens": ["a", "b"], "aspect_start": 1, "aspect_len": 1, "label": "positive"})";
  auto span = dir.write("span.jsonl", good + "\n" + R"({"tokens": ["a", "b"], "aspect_start": 2, "aspect_len": 2, "label": "positive"})");
  auto msg = error_of([&] { load_examples(span); });
  CHECK(msg.find(":2:") != std::string::npos);
  CHECK(msg.find("aspect span") != std::string::npos);

  auto label = dir.write("label.jsonl", R"({"tokens": ["a"], "aspect_start": 1, "aspect_len": 1, "label": "mixed"})");
  CHECK(error_of([&] { load_examples(label); }).find("unknown label 'mixed'") != std::string::npos);

  auto broken = dir.write("broken.jsonl", good + "\n\n{not json\n");
  msg = error_of([&] { load_examples(broken); });
  CHECK(msg.find(":3:") != std::string::npos);

  auto missing = dir.write("missing.jsonl", R"({"tokens": ["a"], "aspect_start": 1, "label": "neutral"})");
  CHECK_FALSE(error_of([&] { load_examples(missing); }).empty());

  auto empty = dir.write("empty.jsonl", "");
  CHECK(error_of([&] { load_examples(empty); }).find("no examples") != std::string::npos);
  CHECK_THROWS_AS(load_examples(dir / "absent.jsonl"), DataError);
}

TEST_CASE("examples round trip through JSON lines") {
  TempDir dir;
  auto loaded = load_examples(testing::data_path("train.jsonl"));
  save_examples(dir / "copy.jsonl", loaded);
  auto again = load_examples(dir / "copy.jsonl");
  CHECK(again == loaded);
}

TEST_CASE("fixture label counts") {
  auto train = load_examples(testing::data_path("train.jsonl"));
  auto counts = label_counts(train);
  CHECK(train.size() == 32);
  CHECK(counts[0] + counts[1] + counts[2] == 32);
}

TEST_CASE("parse a two-token sentence") {
  auto graphs = parse_conllu_text("1\tgood\tgood\tADJ\t_\t_\t2\tamod\t_\t_\n2\tfood\tfood\tNOUN\t_\t_\t0\troot\t_\t_\n");
  REQUIRE(graphs.size() == 1);
  CHECK(graphs[0].n == 2);
  REQUIRE(graphs[0].edges.size() == 1);
  CHECK(graphs[0].edges[0] == DependencyEdge{2, 1, "amod"});
  CHECK(graphs[0].roots == std::vector<std::size_t>{2});
}

TEST_CASE("conllu blocks, comments, multiword tokens and empty nodes") {
  const std::string text =
      "# sent_id = 1\n"
      "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n"
      "1\tdo\tdo\t_\t_\t_\t0\troot\t_\t_\n"
      "2\tn't\tnot\t_\t_\t_\t1\tadvmod\t_\t_\n"
      "2.1\tx\tx\t_\t_\t_\t_\t_\t_\t_\n"
      "\n\n"
      "1\tyes\tyes\t_\t_\t_\t0\troot\t_\t_\n"
      "\n"
      "1\ta\ta\t_\t_\t_\t2\tdet\t_\t_\n"
      "2\tb\tb\t_\t_\t_\t0\troot\t_\t_\n";
  auto graphs = parse_conllu_text(text);
  REQUIRE(graphs.size() == 3);
  CHECK(graphs[0].n == 2);
  CHECK(graphs[0].edges == std::vector<DependencyEdge>{{1, 2, "advmod"}});
  CHECK(graphs[1].edges.empty());
  CHECK(graphs[2].forms == std::vector<std::string>{"a", "b"});

  auto fixture = parse_conllu(testing::data_path("train.conllu"));
  CHECK(fixture.size() == 32);
}

TEST_CASE("conllu errors name the sentence block") {
  auto cycle = "1\ta\ta\t_\t_\t_\t0\troot\t_\t_\n\n"
               "1\ta\ta\t_\t_\t_\t2\tdep\t_\t_\n2\tb\tb\t_\t_\t_\t3\tdep\t_\t_\n3\tc\tc\t_\t_\t_\t1\tdep\t_\t_\n";
  auto msg = error_of([&] { parse_conllu_text(cycle); });
  CHECK(msg.find("sentence block 2") != std::string::npos);
  CHECK(msg.find("cycle") != std::string::npos);

  CHECK(error_of([] { parse_conllu_text("1\ta\ta\t_\t_\t0\troot\n"); }).find("10 tab-separated") != std::string::npos);
  CHECK(error_of([] { parse_conllu_text("1\ta\ta\t_\t_\t_\tX\troot\t_\t_\n"); }).find("non-integer HEAD") !=
        std::string::npos);
  CHECK_FALSE(error_of([] { parse_conllu_text("1\ta\ta\t_\t_\t_\t5\tdep\t_\t_\n"); }).empty());
  CHECK_FALSE(error_of([] { parse_conllu_text("1\ta\ta\t_\t_\t_\t1\tdep\t_\t_\n"); }).empty());
}

TEST_CASE("attach parses checks alignment") {
  auto examples = load_examples(testing::data_path("train.jsonl"));
  auto graphs = parse_conllu(testing::data_path("train.conllu"));
  auto shifted = graphs;
  std::rotate(shifted.begin(), shifted.begin() + 1, shifted.end());
  auto copy = examples;
  bool any_mismatch = false;
  for (std::size_t i = 0; i < copy.size(); ++i) any_mismatch |= shifted[i].n != copy[i].size();
  if (any_mismatch) CHECK_THROWS_AS(attach_parses(copy, shifted, "x"), DataError);

  graphs.pop_back();
  CHECK_THROWS_AS(attach_parses(copy, graphs, "x"), DataError);

  attach_parses(examples, parse_conllu(testing::data_path("train.conllu")), "train.conllu");
  for (const auto& ex : examples) CHECK(ex.parse->n == ex.size());
}

TEST_CASE("vocabulary ids") {
  std::vector<std::vector<std::string>> corpus{{"a", "a", "b"}};
  auto v = build_vocab(corpus);
  CHECK(v.id("<pad>") == 0);
  CHECK(v.id("<unk>") == 1);
  CHECK(v.id("a") == 2);
  CHECK(v.id("b") == 3);
  CHECK(v.id("zzz") == Vocabulary::kUnk);

  auto pruned = build_vocab(corpus, 2);
  CHECK(pruned.id("b") == Vocabulary::kUnk);
  CHECK(pruned.size() == 3);

  CHECK(build_vocab(corpus) == v);
  CHECK(build_vocab(corpus).digest() == v.digest());

  std::vector<std::vector<std::string>> ties{{"c", "b", "a", "c"}};
  auto t = build_vocab(ties);
  CHECK(t.tokens() == std::vector<std::string>{"<pad>", "<unk>", "c", "a", "b"});
}

TEST_CASE("glove loading") {
  TempDir dir;
  std::vector<std::vector<std::string>> corpus{{"the", "The", "cat", "zebra"}};
  auto vocab = build_vocab(corpus);

  SUBCASE("direct read and case-insensitive fallback") {
    auto p = dir.write("g.txt", "the 0.1 0.2 0.3\nCAT 1 2 3\n");
    auto table = load_glove(p, vocab);
    CHECK(table.dim == 3);
    auto row = table.row(vocab.id("the"));
    CHECK(row[0] == 0.1);
    CHECK(row[1] == 0.2);
    CHECK(row[2] == 0.3);
    CHECK(table.row(vocab.id("cat"))[2] == 3.0);
    // "The" has no exact line; it falls back to the lowercase "the" row.
    CHECK(table.row(vocab.id("The"))[0] == 0.1);
    for (double x : table.row(Vocabulary::kPad)) CHECK(x == 0.0);
  }

  SUBCASE("dimension errors") {
    std::string lines;
    for (int i = 0; i < 3; ++i) {
      lines += "w" + std::to_string(i);
      for (int k = 0; k < (i == 1 ? 299 : 300); ++k) lines += " 0.5";
      lines += "\n";
    }
    auto p = dir.write("bad.txt", lines);
    auto msg = error_of([&] { load_glove(p, vocab); });
    CHECK(msg.find(":2:") != std::string::npos);
    CHECK(msg.find("dimension") != std::string::npos);

    auto q = dir.write("short.txt", "the 0.1 0.2\n");
    CHECK_THROWS_AS(load_glove(q, vocab, 1, 3), DataError);
    auto r = dir.write("nan.txt", "the 0.1 abc 0.3\n");
    CHECK(error_of([&] { load_glove(r, vocab); }).find("unreadable float") != std::string::npos);
  }

  SUBCASE("missing rows stay inside the init bound") {
    auto p = dir.write("g.txt", "the 0.1 0.2 0.3\n");
    const double bound = 0.25 / 3.0;
    std::size_t draws = 0;
    double widest = 0.0;
    for (std::uint64_t seed = 1; draws < 1000; ++seed) {
      auto table = load_glove(p, vocab, seed);
      for (double x : table.row(vocab.id("zebra"))) {
        CHECK(std::abs(x) <= bound);
        widest = std::max(widest, std::abs(x));
        ++draws;
      }
    }
    // the draws actually spread across the interval
    CHECK(widest > 0.9 * bound);
  }
}
