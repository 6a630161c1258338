#include <gtest/gtest.h>

#include "builders.hpp"
#include "factdelta/dataset.hpp"

using namespace factdelta;
using namespace fdtest;

namespace {

EntityInfoMap usa_labels() {
  return {{"Q30", {"United States", "country"}},
          {"Q142", {"France", "country"}},
          {"Q6279", {"Joe Biden", ""}},
          {"Q22686", {"Donald Trump", ""}},
          {"Q3052772", {"Emmanuel Macron", ""}},
          {"P6", {"head of government", ""}}};
}

TemplateStore usa_templates() {
  return {{"P6",
           {{RelationId("P6"), "The president of SUBJ is OBJ", 9}, {RelationId("P6"), "SUBJ is led by OBJ", 4}}}};
}

ClassifiedGroup usa_group() {
  ClassifiedGroup g;
  g.key = GroupKey{EntityId("Q30"), RelationId("P6")};
  g.scenario = Scenario::ReplaceObject;
  g.subject_popularity = 100;
  g.triples = {
      {triple("Q30", "P6", item("Q22686"), interval(ymd(2017, 1, 20), ymd(2021, 1, 20))), Membership::Both,
       Label::Obsolete},
      {triple("Q30", "P6", item("Q6279"), interval(ymd(2021, 1, 20))), Membership::NewOnly, Label::New}};
  return g;
}

std::vector<NeighborFact> usa_neighbors() {
  return {{triple("Q142", "P6", item("Q3052772")), 0.75, 42}, {triple("Q142", "P1082", qty("+67000000")), 0.5, 42}};
}

}  // namespace

TEST(DatasetRecord, QueryTripleIsFirstNew) {
  auto g = usa_group();
  EXPECT_EQ(query_triple(g).triple.object, item("Q6279"));
  g.triples[1].label = Label::Static;
  EXPECT_EQ(query_triple(g).triple.object, item("Q22686"));
  g.triples.clear();
  EXPECT_THROW(query_triple(g), std::invalid_argument);
}

TEST(DatasetRecord, UsaVerbalization) {
  auto r = make_dataset_record(usa_group(), usa_neighbors(), usa_templates(), usa_labels());
  EXPECT_EQ(r.subject_label, "United States");
  EXPECT_EQ(r.relation_label, "head of government");
  EXPECT_EQ(r.popularity, 100u);
  ASSERT_EQ(r.triples.size(), 2u);
  EXPECT_EQ(r.triples[0].object_label, "Donald Trump");
  EXPECT_EQ(r.triples[1].label, Label::New);
  ASSERT_TRUE(r.verbalization);
  EXPECT_EQ(r.verbalization->update_sentence, "The president of United States is Joe Biden");
  EXPECT_EQ(r.verbalization->primary_cloze, "The president of United States is");
  EXPECT_EQ(r.verbalization->alt_clozes, std::vector<std::string>{"United States is led by"});

  ASSERT_EQ(r.neighbors.size(), 2u);
  EXPECT_EQ(r.neighbors[0].cloze, "The president of France is");
  EXPECT_EQ(r.neighbors[0].object_label, "Emmanuel Macron");
  EXPECT_EQ(r.neighbors[0].similarity, 0.75);
  EXPECT_EQ(r.neighbors[0].popularity, 42u);
  // No template for population: the neighbor is kept without a cloze.
  EXPECT_EQ(r.neighbors[1].cloze, "");
  EXPECT_EQ(r.neighbors[1].object_label, "67000000");
}

TEST(DatasetRecord, NoTemplateNoVerbalization) {
  auto r = make_dataset_record(usa_group(), {}, {}, usa_labels());
  EXPECT_FALSE(r.verbalization);
  EXPECT_TRUE(r.neighbors.empty());
}

TEST(DatasetRecord, JsonRoundTrip) {
  auto r = make_dataset_record(usa_group(), usa_neighbors(), usa_templates(), usa_labels());
  json j = dataset_record_to_json(r);
  EXPECT_TRUE(validate_dataset_record(j).empty());
  EXPECT_EQ(j["scenario"], "ReplaceObject");
  EXPECT_EQ(j["subject"]["id"], "Q30");
  EXPECT_EQ(dataset_record_to_json(dataset_record_from_json(j)), j);

  r.verbalization.reset();
  json k = dataset_record_to_json(r);
  EXPECT_TRUE(k["verbalization"].is_null());
  EXPECT_TRUE(validate_dataset_record(k).empty());
  EXPECT_FALSE(dataset_record_from_json(k).verbalization);
}

TEST(DatasetRecord, Validation) {
  json good = dataset_record_to_json(make_dataset_record(usa_group(), usa_neighbors(), usa_templates(), usa_labels()));
  EXPECT_EQ(validate_dataset_record(json::array()), std::vector<std::string>{"record is not an object"});

  auto problems_after = [&](auto edit) {
    json j = good;
    edit(j);
    return validate_dataset_record(j);
  };
  EXPECT_EQ(problems_after([](json& j) { j.erase("verbalization"); }),
            std::vector<std::string>{"$.verbalization: missing"});
  EXPECT_EQ(problems_after([](json& j) { j["scenario"] = "Rename"; }),
            std::vector<std::string>{"$.scenario: unknown value"});
  EXPECT_EQ(problems_after([](json& j) { j["triples"] = json::array(); }),
            std::vector<std::string>{"$.triples: empty"});
  EXPECT_EQ(problems_after([](json& j) { j["triples"][0]["label"] = "Maybe"; }),
            std::vector<std::string>{"$.triples[].label: unknown value"});
  EXPECT_EQ(problems_after([](json& j) { j["subject"]["popularity"] = -1; }),
            std::vector<std::string>{"$.subject.popularity: wrong type"});
  EXPECT_EQ(problems_after([](json& j) { j["neighbors"][0]["similarity"] = "high"; }),
            std::vector<std::string>{"$.neighbors[].similarity: wrong type"});
  EXPECT_EQ(problems_after([](json& j) {
              j["verbalization"]["alt_clozes"] = json::array({"a", "b", "c", "d", "e"});
            }),
            std::vector<std::string>{"$.verbalization.alt_clozes: more than 4"});
  // Integral similarity is still a number.
  EXPECT_TRUE(problems_after([](json& j) { j["neighbors"][0]["similarity"] = 1; }).empty());
}
