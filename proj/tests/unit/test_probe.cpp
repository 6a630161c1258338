#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "builders.hpp"
#include "factdelta/probe.hpp"

using namespace factdelta;
using namespace fdtest;

namespace {

DatasetNeighbor neighbor(const std::string& s, const std::string& r, const std::string& label,
                         const std::string& cloze, double sim = 0.5, std::uint64_t pop = 7) {
  return DatasetNeighbor{s, r, text(label), label, cloze, sim, pop};
}

DatasetRecord usa_record() {
  DatasetRecord r;
  r.subject_id = "Q30";
  r.subject_label = "United States";
  r.popularity = 100;
  r.relation_id = "P6";
  r.relation_label = "head of government";
  r.scenario = Scenario::ReplaceObject;
  r.triples = {{item("Q22686"), "Donald Trump", interval(ymd(2017, 1, 20), ymd(2021, 1, 20)), Label::Obsolete},
               {item("Q6279"), "Joe Biden", interval(ymd(2021, 1, 20)), Label::New}};
  r.verbalization = VerbalizationSet{"The president of United States is Joe Biden",
                                     "The president of United States is",
                                     {"United States is led by"}};
  r.neighbors = {neighbor("Q142", "P6", "Emmanuel Macron", "The president of France is")};
  return r;
}

const PlannedRequest& find_role(const CasePlan& p, ProbeRole role, std::size_t nth = 0) {
  for (const auto& r : p.requests)
    if (r.role == role && nth-- == 0) return r;
  throw std::runtime_error("role not planned");
}

std::size_t count_role(const CasePlan& p, ProbeRole role) {
  std::size_t n = 0;
  for (const auto& r : p.requests) n += r.role == role;
  return n;
}

ProbeResponse answer(const PlannedRequest& pr, std::vector<double> probs, std::optional<std::string> gen = {}) {
  ProbeResponse r;
  r.case_id = pr.request.case_id;
  for (double p : probs) r.logprobs.push_back({std::log(p)});
  r.generation = std::move(gen);
  return r;
}

}  // namespace

// --- Wire formats ------------------------------------------------------------

TEST(ProbeWire, RequestRoundTrip) {
  ProbeRequest r{"abc", RequestKind::Score, "The capital of France is", {"Paris", "Lyon"}, 0};
  json j = probe_request_to_json(r);
  EXPECT_EQ(j.dump(),
            R"({"case_id":"abc","kind":"score","prompt":"The capital of France is",)"
            R"("continuations":["Paris","Lyon"],"max_new_tokens":0})");
  ProbeRequest back = probe_request_from_json(j);
  EXPECT_EQ(back.case_id, "abc");
  EXPECT_EQ(back.kind, RequestKind::Score);
  EXPECT_EQ(back.continuations, r.continuations);

  ProbeRequest g{"g", RequestKind::Generate, "p", {}, 100};
  EXPECT_EQ(probe_request_from_json(probe_request_to_json(g)).kind, RequestKind::Generate);
  EXPECT_EQ(probe_request_from_json(probe_request_to_json(g)).max_new_tokens, 100);
}

TEST(ProbeWire, ResponseRoundTrip) {
  ProbeResponse r{"abc", {{-0.5, -1.25}, {-3.0}}, std::nullopt};
  json j = probe_response_to_json(r);
  EXPECT_FALSE(j.contains("generation"));
  ProbeResponse back = probe_response_from_json(j);
  EXPECT_EQ(back.logprobs, r.logprobs);
  EXPECT_FALSE(back.generation);

  r.generation = "some text";
  EXPECT_EQ(probe_response_from_json(probe_response_to_json(r)).generation, "some text");
  EXPECT_FALSE(probe_response_from_json(json::parse(R"({"case_id":"x","logprobs":[],"generation":null})"))
                   .generation.has_value());
}

TEST(ProbeWire, RequestValidation) {
  EXPECT_TRUE(validate_probe_request(probe_request_to_json({"a", RequestKind::Score, "p", {"x"}, 0})).empty());
  EXPECT_EQ(validate_probe_request(json::array()).size(), 1u);
  auto p = validate_probe_request(json::parse(R"({"kind":"rank","prompt":1,"continuations":[1],"max_new_tokens":-1})"));
  EXPECT_EQ(p.size(), 5u);
  EXPECT_THROW(probe_request_from_json(json::parse(R"({"case_id":"a"})")), ParseError);
}

TEST(ProbeWire, ResponseValidation) {
  EXPECT_TRUE(validate_probe_response(json::parse(R"({"case_id":"a","logprobs":[[-1.0],[]]})")).empty());
  EXPECT_EQ(validate_probe_response(json::parse(R"({"case_id":"a","logprobs":[1.0]})")).size(), 1u);
  EXPECT_EQ(validate_probe_response(json::parse(R"({"case_id":"a","logprobs":[["x"]]})")).size(), 1u);
  EXPECT_EQ(validate_probe_response(json::parse(R"({"case_id":"a","logprobs":[],"generation":3})")).size(), 1u);
  EXPECT_THROW(probe_response_from_json(json::parse(R"({"logprobs":[]})")), ParseError);
}

TEST(ProbeWire, ReadFilesSkipBlankLines) {
  auto dir = temp_dir("probe_read");
  auto path = write_file(dir / "resp.jsonl", "{\"case_id\":\"a\",\"logprobs\":[]}\n\n  \n"
                                             "{\"case_id\":\"b\",\"logprobs\":[[-1]]}\n");
  auto rs = read_probe_responses(path);
  ASSERT_EQ(rs.size(), 2u);
  EXPECT_EQ(rs[1].case_id, "b");
  write_file(dir / "bad.jsonl", "{\"case_id\":\"a\",\"logprobs\":[]}\n{\"case_id\":3}\n");
  try {
    read_probe_responses((dir / "bad.jsonl").string());
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(read_probe_requests((dir / "none.jsonl").string()), IoError);
}

// --- Planning ----------------------------------------------------------------

TEST(ProbePlan, RequestIdIsFrozen) {
  EXPECT_EQ(request_id("Q30", "P6", "update:0", "The president of United States is", {"Joe Biden", "Donald Trump"}),
            "9ec1ca034e99b2c3fecf4621");
  EXPECT_NE(request_id("Q30", "P6", "update:0", "p", {"a", "b"}), request_id("Q30", "P6", "update:0", "p", {"b", "a"}));
}

TEST(ProbePlan, UsaCase) {
  ProbeOptions opts;
  auto plans = plan_probes({usa_record()}, opts);
  ASSERT_EQ(plans.size(), 1u);
  const CasePlan& p = plans[0];
  EXPECT_EQ(p.new_object, "Joe Biden");
  EXPECT_EQ(p.old_object, "Donald Trump");

  const auto& up = find_role(p, ProbeRole::Update);
  EXPECT_EQ(up.request.prompt, "The president of United States is");
  EXPECT_EQ(up.request.continuations, (std::vector<std::string>{"Joe Biden", "Donald Trump"}));
  EXPECT_EQ(up.request.case_id, "9ec1ca034e99b2c3fecf4621");
  EXPECT_EQ(up.request.max_new_tokens, 0);

  EXPECT_EQ(count_role(p, ProbeRole::Alt), 1u);
  EXPECT_EQ(find_role(p, ProbeRole::Alt).request.prompt, "United States is led by");
  const auto& knn = find_role(p, ProbeRole::Knn);
  EXPECT_EQ(knn.request.continuations, (std::vector<std::string>{"Emmanuel Macron"}));
  EXPECT_DOUBLE_EQ(knn.similarity, 0.5);
  EXPECT_EQ(knn.popularity, 7u);
  // The only pooled fact is the France neighbor.
  EXPECT_EQ(count_role(p, ProbeRole::Random), 1u);
  EXPECT_EQ(find_role(p, ProbeRole::Random).request.prompt, "The president of France is");
  const auto& gen = find_role(p, ProbeRole::Generation);
  EXPECT_EQ(gen.request.kind, RequestKind::Generate);
  EXPECT_EQ(gen.request.prompt, "United States is led by");
  EXPECT_EQ(gen.request.max_new_tokens, 100);
  EXPECT_TRUE(gen.request.continuations.empty());

  std::set<std::string> ids;
  for (const auto& r : p.requests) ids.insert(r.request.case_id);
  EXPECT_EQ(ids.size(), p.requests.size());
}

TEST(ProbePlan, Deterministic) {
  auto a = emit_probe_requests(plan_probes({usa_record()}, {}), ProbeMode::Pre);
  auto b = emit_probe_requests(plan_probes({usa_record()}, {}), ProbeMode::Pre);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(probe_request_to_json(a[i]), probe_request_to_json(b[i]));
}

TEST(ProbePlan, SingleTemplateFallsBackToUpdateCloze) {
  auto r = usa_record();
  r.verbalization->alt_clozes.clear();
  auto p = plan_probes({r}, {}).at(0);
  EXPECT_EQ(count_role(p, ProbeRole::Alt), 1u);
  EXPECT_EQ(find_role(p, ProbeRole::Alt).request.prompt, r.verbalization->primary_cloze);
  EXPECT_NE(find_role(p, ProbeRole::Alt).request.case_id, find_role(p, ProbeRole::Update).request.case_id);
  EXPECT_EQ(count_role(p, ProbeRole::Generation), 1u);
}

TEST(ProbePlan, AltClozesCapped) {
  auto r = usa_record();
  r.verbalization->alt_clozes = {"a", "b", "c", "d"};
  ProbeOptions opts;
  opts.max_alt_clozes = 2;
  auto p = plan_probes({r}, opts).at(0);
  EXPECT_EQ(count_role(p, ProbeRole::Alt), 2u);
  EXPECT_EQ(count_role(p, ProbeRole::Generation), 2u);
  EXPECT_EQ(find_role(p, ProbeRole::Alt, 1).request.prompt, "b");
}

TEST(ProbePlan, UnclozedNeighborsAreNotProbed) {
  auto r = usa_record();
  r.neighbors.push_back(neighbor("Q183", "P6", "Olaf Scholz", ""));
  r.neighbors.push_back(neighbor("Q183", "P35", "", "The head of state of Germany is"));
  auto p = plan_probes({r}, {}).at(0);
  EXPECT_EQ(count_role(p, ProbeRole::Knn), 1u);
  EXPECT_EQ(count_role(p, ProbeRole::Random), 1u);
}

TEST(ProbePlan, OnlyReplaceObjectCases) {
  auto add = usa_record();
  add.scenario = Scenario::AddObject;
  auto no_old = usa_record();
  no_old.triples.erase(no_old.triples.begin());
  EXPECT_TRUE(plan_probes({add, no_old}, {}).empty());
  EXPECT_TRUE(plan_probes({}, {}).empty());
  EXPECT_TRUE(emit_probe_requests({}, ProbeMode::Post).empty());
}

TEST(ProbePlan, MissingVerbalization) {
  auto r = usa_record();
  r.verbalization.reset();
  EXPECT_THROW(plan_probes({r}, {}), MissingVerbalization);
  ProbeOptions opts;
  opts.skip_unverbalized = true;
  EXPECT_TRUE(plan_probes({r}, opts).empty());
  // Other scenarios never need a verbalization.
  r.scenario = Scenario::Archive;
  EXPECT_TRUE(plan_probes({r}, {}).empty());
}

TEST(ProbePlan, RandomNeighborsExcludeOwnKeyAndDeduplicate) {
  auto usa = usa_record();
  auto france = usa_record();
  france.subject_id = "Q142";
  france.subject_label = "France";
  france.verbalization->primary_cloze = "The president of France is";
  // USA's neighbor is France/P6, which is France's own key; the duplicate
  // Germany fact is pooled once.
  usa.neighbors.push_back(neighbor("Q183", "P6", "Olaf Scholz", "The chancellor of Germany is"));
  france.neighbors = {neighbor("Q183", "P6", "Olaf Scholz", "The chancellor of Germany is"),
                      neighbor("Q30", "P6", "Joe Biden", "The president of United States is")};
  auto plans = plan_probes({usa, france}, {});
  ASSERT_EQ(plans.size(), 2u);
  auto randoms = [](const CasePlan& p) {
    std::multiset<std::string> out;
    for (const auto& r : p.requests)
      if (r.role == ProbeRole::Random) out.insert(r.request.prompt);
    return out;
  };
  EXPECT_EQ(randoms(plans[0]), (std::multiset<std::string>{"The chancellor of Germany is", "The president of France is"}));
  EXPECT_EQ(randoms(plans[1]),
            (std::multiset<std::string>{"The chancellor of Germany is", "The president of United States is"}));

  ProbeOptions one;
  one.random_neighbors = 1;
  EXPECT_EQ(count_role(plan_probes({usa, france}, one).at(0), ProbeRole::Random), 1u);
}

TEST(ProbePlan, RandomDrawDependsOnSeed) {
  std::vector<DatasetRecord> records;
  for (int i = 0; i < 30; ++i) {
    auto r = usa_record();
    r.subject_id = "Q" + std::to_string(1000 + i);
    r.neighbors = {neighbor("Q" + std::to_string(5000 + i), "P6", "x" + std::to_string(i), "c" + std::to_string(i))};
    records.push_back(r);
  }
  ProbeOptions a, b;
  a.random_neighbors = b.random_neighbors = 5;
  b.seed = 99;
  auto prompts = [](const CasePlan& p) {
    std::vector<std::string> out;
    for (const auto& r : p.requests)
      if (r.role == ProbeRole::Random) out.push_back(r.request.prompt);
    return out;
  };
  auto pa = plan_probes(records, a), pb = plan_probes(records, b);
  bool differs = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(prompts(pa[i]).size(), 5u);
    differs = differs || prompts(pa[i]) != prompts(pb[i]);
  }
  EXPECT_TRUE(differs);
}

TEST(ProbeEmit, PromptBaselinePrefixesUpdateSentence) {
  auto plans = plan_probes({usa_record()}, {});
  auto pre = emit_probe_requests(plans, ProbeMode::Pre);
  auto base = emit_probe_requests(plans, ProbeMode::PromptBaseline);
  ASSERT_EQ(pre.size(), base.size());
  EXPECT_EQ(base[0].prompt, "The president of United States is Joe Biden. The president of United States is");
  for (std::size_t i = 0; i < pre.size(); ++i) {
    EXPECT_EQ(base[i].case_id, pre[i].case_id);
    EXPECT_EQ(base[i].prompt, "The president of United States is Joe Biden. " + pre[i].prompt);
  }
  auto post = emit_probe_requests(plans, ProbeMode::Post);
  for (std::size_t i = 0; i < pre.size(); ++i) EXPECT_EQ(post[i].prompt, pre[i].prompt);
}

TEST(ProbeEmit, ParseMode) {
  EXPECT_EQ(parse_probe_mode("pre"), ProbeMode::Pre);
  EXPECT_EQ(parse_probe_mode("post"), ProbeMode::Post);
  EXPECT_EQ(parse_probe_mode("prompt-baseline"), ProbeMode::PromptBaseline);
  EXPECT_THROW(parse_probe_mode("baseline"), std::invalid_argument);
}

// --- Responses and scoring ---------------------------------------------------

namespace {

struct Answers {
  std::vector<ProbeResponse> pre, post;
};

// Post: update 0.6 vs 0.2, alt 0.3 vs 0.5, neighbor 0.8 -> 0.5.
Answers usa_answers(const CasePlan& p) {
  Answers a;
  for (const auto& r : p.requests) {
    switch (r.role) {
      case ProbeRole::Update:
        a.pre.push_back(answer(r, {0.1, 0.9}));
        a.post.push_back(answer(r, {0.6, 0.2}));
        break;
      case ProbeRole::Alt:
        a.pre.push_back(answer(r, {0.1, 0.9}));
        a.post.push_back(answer(r, {0.3, 0.5}));
        break;
      case ProbeRole::Knn:
      case ProbeRole::Random:
        a.pre.push_back(answer(r, {0.8}));
        a.post.push_back(answer(r, {0.5}));
        break;
      case ProbeRole::Generation:
        a.pre.push_back(answer(r, {}, "x"));
        a.post.push_back(answer(r, {}, "a b c d"));
        break;
    }
  }
  return a;
}

}  // namespace

TEST(ProbeJoin, DuplicateReportedBeforeMissing) {
  auto p = plan_probes({usa_record()}, {}).at(0);
  auto a = usa_answers(p);
  auto resp = a.post;
  resp.pop_back();
  resp.push_back(resp.front());
  try {
    join_responses({p}, resp);
    FAIL() << "expected DuplicateResponse";
  } catch (const DuplicateResponse& e) {
    EXPECT_EQ(e.ids, std::vector<std::string>{p.requests.front().request.case_id});
  }
  resp.pop_back();
  try {
    join_responses({p}, resp);
    FAIL() << "expected UnansweredRequest";
  } catch (const UnansweredRequest& e) {
    EXPECT_EQ(e.ids, std::vector<std::string>{p.requests.back().request.case_id});
  }
  EXPECT_EQ(join_responses({p}, a.post).size(), p.requests.size());
}

TEST(ProbeJoin, ExtraResponsesAreIgnored) {
  auto p = plan_probes({usa_record()}, {}).at(0);
  auto resp = usa_answers(p).post;
  resp.push_back({"unrelated", {}, std::nullopt});
  EXPECT_NO_THROW(join_responses({p}, resp));
}

TEST(ProbeScore, HandComputedCase) {
  auto p = plan_probes({usa_record()}, {}).at(0);
  auto a = usa_answers(p);
  auto cs = score_case(p, join_responses({p}, a.pre), join_responses({p}, a.post));
  EXPECT_NEAR(cs.result.efficacy_diff, 0.4, 1e-12);
  EXPECT_EQ(cs.result.efficacy_success, 1.0);
  EXPECT_NEAR(cs.result.gen_diff, -0.2, 1e-12);
  EXPECT_EQ(cs.result.gen_success, 0.0);
  EXPECT_NEAR(cs.result.bleedover_knn, 0.3, 1e-12);
  EXPECT_NEAR(cs.result.bleedover_random, 0.3, 1e-12);
  // "a b c d": three distinct bigrams, two distinct trigrams.
  EXPECT_NEAR(cs.result.fluency, (2.0 / 3.0) * std::log2(3.0) + 4.0 / 3.0, 1e-12);
  ASSERT_EQ(cs.knn_bleedover.size(), 1u);
  EXPECT_NEAR(cs.knn_bleedover[0].bleedover, 0.3, 1e-12);
  EXPECT_EQ(cs.knn_bleedover[0].popularity, 7.0);
  EXPECT_EQ(cs.knn_bleedover[0].similarity, 0.5);
}

TEST(ProbeScore, UnchangedModelHasNoBleedover) {
  auto p = plan_probes({usa_record()}, {}).at(0);
  auto a = usa_answers(p);
  auto idx = join_responses({p}, a.post);
  auto cs = score_case(p, idx, idx);
  EXPECT_EQ(cs.result.bleedover_knn, 0.0);
  EXPECT_EQ(cs.result.bleedover_random, 0.0);
}

TEST(ProbeScore, NoNeighborsScoresZeroBleedover) {
  auto r = usa_record();
  r.neighbors.clear();
  auto p = plan_probes({r}, {}).at(0);
  EXPECT_EQ(count_role(p, ProbeRole::Random), 0u);
  auto a = usa_answers(p);
  auto cs = score_case(p, join_responses({p}, a.pre), join_responses({p}, a.post));
  EXPECT_EQ(cs.result.bleedover_knn, 0.0);
  EXPECT_EQ(cs.result.bleedover_random, 0.0);
  EXPECT_TRUE(cs.knn_bleedover.empty());
}

TEST(ProbeScore, FullSequenceMode) {
  auto p = plan_probes({usa_record()}, {}).at(0);
  auto a = usa_answers(p);
  // Two-token continuation for the new object on the update prompt.
  for (auto& r : a.post)
    if (r.case_id == find_role(p, ProbeRole::Update).request.case_id) r.logprobs[0] = {std::log(0.6), std::log(0.5)};
  auto pre = join_responses({p}, a.pre), post = join_responses({p}, a.post);
  EXPECT_NEAR(score_case(p, pre, post, SequenceMode::FullSequence).result.efficacy_diff, 0.3 - 0.2, 1e-12);
  EXPECT_NEAR(score_case(p, pre, post).result.efficacy_diff, std::sqrt(0.3) - 0.2, 1e-12);
}

TEST(ProbeScore, LogprobCountMismatch) {
  auto p = plan_probes({usa_record()}, {}).at(0);
  auto a = usa_answers(p);
  a.post.front().logprobs.pop_back();
  auto pre = join_responses({p}, a.pre), post = join_responses({p}, a.post);
  EXPECT_THROW(score_case(p, pre, post), MetricsError);
}
