#include "factdelta/verbalize.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <mutex>
#include <thread>

#include "factdelta/hashing.hpp"

namespace factdelta {

namespace {

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + needle.size()))
    ++n;
  return n;
}

bool is_terminal_punct(char c) { return c == '.' || c == '!' || c == '?' || c == ';' || c == ','; }

std::string_view strip_tail(std::string_view s) {
  while (!s.empty() && (std::isspace(static_cast<unsigned char>(s.back())) || is_terminal_punct(s.back())))
    s.remove_suffix(1);
  return s;
}

std::string collapse_spaces(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string normalize_template(std::string_view text) { return std::string(strip_tail(collapse_spaces(text))); }

bool is_valid_template(std::string_view text) {
  std::string norm = normalize_template(text);
  std::string_view v(norm);
  if (count_occurrences(v, kSubjectSlot) != 1 || count_occurrences(v, kObjectSlot) != 1) return false;
  return v.ends_with(kObjectSlot);
}

// --- Sampling ----------------------------------------------------------------

std::vector<Triple> sample_triples_for_templates(const PreprocessedSnapshot& old_snap,
                                                 const PopularityTable& popularity,
                                                 const SamplingOptions& opts) {
  std::vector<std::pair<std::uint64_t, std::string>> entities;
  for (const auto& g : old_snap.groups())
    if (entities.empty() || entities.back().second != g.key.subject.id)
      entities.emplace_back(popularity.get(g.key.subject.id), g.key.subject.id);
  std::sort(entities.begin(), entities.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (entities.size() > opts.top_entities) entities.resize(opts.top_entities);
  PortableRng rng(opts.seed);
  rng.shuffle(entities);

  std::map<std::string, std::size_t> per_relation;
  std::vector<Triple> out;
  for (const auto& [pop, entity] : entities) {
    auto triples = old_snap.subject_triples(entity);
    for (std::size_t i = 0; i < triples.size();) {
      const Triple& first = triples[i];
      std::size_t& count = per_relation[first.relation.id];
      if (count < opts.per_relation) {
        out.push_back(first);
        ++count;
      }
      while (i < triples.size() && triples[i].relation.id == first.relation.id) ++i;
    }
  }
  return out;
}

// --- Prompts -----------------------------------------------------------------

std::string verbalization_system_prompt() {
  return "You are an advanced knowledge triple verbalization system. You take as input a knowledge "
         "triple (subject, relation, object) and generate a list of 10 linguistically diverse "
         "verbalizations of the triple. For example, the input could be : (France, capital, Paris) and "
         "one of your verbalizations may be : \"The capital of France is Paris\".\n\n"
         "The veracity of the knowledge triple does not affect the quality of your generation.\n\n"
         "Examples of correct verbalizations:\n\n"
         "- (Matriak, instance of, university) --> \"Matriak is a university.\"\n"
         "- (Johnathan Smith, date of death, 11-05-2012) --> \"Johnathan Smith died in 11-05-2012.\"\n"
         "- (Tranquility Base Hotel & Casino, follows, AM) --> \"Tranquility Base Hotel & Casino follows AM.\"\n"
         "- (Paris, named after, Parisii) --> \"Paris was named after Parisii.\"";
}

std::string verbalization_user_prompt(const VerbalizationPrompt& p) {
  std::string out = "Here is the knowledge triple to verbalize: ([SUB], [REL], [OBJ]). Your sentences should "
                    "be concise and end with the term [OBJ].\n\n"
                    "Due to the ambiguity that could arise from the provided labels, here is their meaning:\n\n"
                    "- (subject) \"[SUB]\" : \"[SUB_DEF]\"\n"
                    "- (relation) \"[REL]\" : \"[REL_DEF]\"\n"
                    "- (object) \"[OBJ]\" : \"[OBJ_DEF]\"\n\n"
                    "Finally, here is an example where the relation \"[REL]\" is employed : ([EXP_SUB], "
                    "[REL], [EXP_OBJ]).";
  const std::pair<std::string_view, const std::string*> slots[] = {
      {"[SUB_DEF]", &p.subject_def}, {"[REL_DEF]", &p.relation_def}, {"[OBJ_DEF]", &p.object_def},
      {"[EXP_SUB]", &p.example_subject}, {"[EXP_OBJ]", &p.example_object}, {"[SUB]", &p.subject},
      {"[REL]", &p.relation},          {"[OBJ]", &p.object},
  };
  // Single left-to-right pass so substituted labels are never rescanned.
  std::string result;
  for (std::size_t i = 0; i < out.size();) {
    bool replaced = false;
    if (out[i] == '[') {
      for (const auto& [slot, value] : slots) {
        if (std::string_view(out).substr(i, slot.size()) == slot) {
          result += *value;
          i += slot.size();
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) result.push_back(out[i++]);
  }
  return result;
}

std::vector<std::string> parse_verbalization_list(const std::string& response) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= response.size()) {
    auto nl = response.find('\n', start);
    std::string_view line(response.data() + start, (nl == std::string::npos ? response.size() : nl) - start);
    start = nl == std::string::npos ? response.size() + 1 : nl + 1;

    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
    if (line.empty()) continue;
    std::size_t digits = 0;
    while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) ++digits;
    if (digits > 0 && digits < line.size() && (line[digits] == '.' || line[digits] == ')')) {
      line.remove_prefix(digits + 1);
    } else if (line.front() == '-' || line.front() == '*') {
      line.remove_prefix(1);
    }
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
    if (line.size() >= 2 && line.front() == '"' && line.back() == '"') {
      line.remove_prefix(1);
      line.remove_suffix(1);
    }
    if (!line.empty()) out.emplace_back(line);
  }
  if (out.empty()) throw ParseError("no verbalization found in response");
  return out;
}

std::vector<std::string> request_verbalizations(const VerbalizationPrompt& prompt, LlmClient& client) {
  std::string text = client.complete(verbalization_system_prompt(), verbalization_user_prompt(prompt), ChatParams{});
  auto items = parse_verbalization_list(text);
  if (items.size() > 10) items.resize(10);
  return items;
}

// --- Templates -------------------------------------------------------------

std::optional<std::string> extract_template(std::string_view sentence, std::string_view subject_label,
                                            std::string_view object_label) {
  if (subject_label.empty() || object_label.empty()) return std::nullopt;
  std::string norm = collapse_spaces(sentence);
  std::string_view body = strip_tail(norm);
  if (!body.ends_with(object_label)) return std::nullopt;
  std::string_view prefix = body.substr(0, body.size() - object_label.size());
  auto pos = prefix.find(subject_label);
  if (pos == std::string_view::npos) return std::nullopt;
  std::string out;
  out.append(prefix.substr(0, pos));
  out.append(kSubjectSlot);
  out.append(prefix.substr(pos + subject_label.size()));
  out.append(kObjectSlot);
  if (!is_valid_template(out)) return std::nullopt;
  return out;
}

std::vector<Template> select_templates(const RelationId& relation, const std::vector<Template>& candidates,
                                       std::size_t limit) {
  std::map<std::string, std::uint64_t> merged;
  for (const auto& c : candidates) {
    std::string norm = normalize_template(c.text);
    if (!is_valid_template(norm)) continue;
    merged[norm] += c.frequency;
  }
  std::vector<Template> out;
  for (auto& [text, freq] : merged) out.push_back(Template{relation, text, freq});
  std::sort(out.begin(), out.end(), [](const Template& a, const Template& b) {
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    return a.text < b.text;
  });
  if (out.size() > limit) out.resize(limit);
  return out;
}

std::string render(const Template& tpl, std::string_view subject_label,
                   std::optional<std::string_view> object_label) {
  if (subject_label.empty()) throw MissingLabel("missing subject label");
  if (object_label && object_label->empty()) throw MissingLabel("missing object label");
  std::string text = normalize_template(tpl.text);
  auto subj = text.find(kSubjectSlot);
  auto obj = text.rfind(kObjectSlot);
  if (subj == std::string::npos || obj == std::string::npos || obj < subj)
    throw ParseError("invalid template '" + tpl.text + "'");
  std::string out = text.substr(0, subj);
  out += subject_label;
  out += text.substr(subj + kSubjectSlot.size(), obj - subj - kSubjectSlot.size());
  if (object_label) {
    out += *object_label;
  } else if (!out.empty() && out.back() == ' ') {
    out.pop_back();
  }
  return out;
}

TemplateStore load_template_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::map<std::string, std::vector<Template>> candidates;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j = json::parse(line);
      Template t{RelationId(j.at("relation").get<std::string>()), j.at("template").get<std::string>(),
                 j.contains("frequency") ? j.at("frequency").get<std::uint64_t>() : 1};
      candidates[t.relation.id].push_back(std::move(t));
    } catch (const std::exception& e) {
      throw SchemaError(line_no, e.what());
    }
  }
  TemplateStore store;
  for (auto& [rel, cands] : candidates) {
    auto selected = select_templates(RelationId(rel), cands);
    if (!selected.empty()) store[rel] = std::move(selected);
  }
  return store;
}

void write_template_file(const std::string& path, const TemplateStore& store) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (const auto& [rel, templates] : store)
    for (const auto& t : templates)
      out << json{{"relation", rel}, {"template", t.text}, {"frequency", t.frequency}}.dump() << '\n';
}

// --- Object rendering --------------------------------------------------------

std::string label_of(const std::string& id, const EntityInfoMap& labels) {
  auto it = labels.find(id);
  if (it == labels.end() || it->second.label.empty()) return id;
  return it->second.label;
}

namespace {

constexpr std::string_view kMonths[] = {"January", "February", "March",     "April",   "May",      "June",
                                        "July",    "August",   "September", "October", "November", "December"};

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

std::string render_object(const ObjectValue& v, const EntityInfoMap& labels) {
  return std::visit(
      overloaded{
          [&](const EntityValue& e) { return label_of(e.entity.id, labels); },
          [&](const QuantityValue& q) {
            std::string out = q.amount.str();
            if (!q.unit.empty()) out += " " + label_of(q.unit, labels);
            return out;
          },
          [](const TimeValue& t) {
            const std::string year = std::to_string(t.date.year());
            const std::string month(kMonths[t.date.month() - 1]);
            if (t.precision <= 9) return year;
            if (t.precision == 10) return month + " " + year;
            return std::to_string(t.date.day()) + " " + month + " " + year;
          },
          [](const TextValue& t) { return t.text; },
          [](const MonolingualTextValue& m) { return m.text; },
          [](const UrlValue& u) { return u.url; },
          [](const ExternalIdValue& x) { return x.id; },
          [](const GlobeCoordinateValue&) { return std::string(); },
          [](const SomeValue&) { return std::string(); },
          [](const NoValue&) { return std::string(); },
      },
      v);
}

std::optional<VerbalizationSet> verbalize(const std::vector<Template>& templates,
                                          std::string_view subject_label, std::string_view object_label) {
  if (templates.empty()) return std::nullopt;
  VerbalizationSet out;
  out.update_sentence = render(templates.front(), subject_label, object_label);
  out.primary_cloze = render(templates.front(), subject_label);
  for (std::size_t i = 1; i < templates.size() && out.alt_clozes.size() < 4; ++i)
    out.alt_clozes.push_back(render(templates[i], subject_label));
  return out;
}

// --- LLM template generation -------------------------------------------------

TemplateStore generate_templates(const std::vector<Triple>& samples, const EntityInfoMap& labels,
                                 LlmClient& client, std::size_t parallelism, LlmTemplateStats* stats) {
  // An example triple per relation for the [EXP_*] slots: the first sample
  // of that relation with a different subject, else the sample itself.
  auto example_for = [&](const Triple& t) -> const Triple& {
    for (const auto& s : samples)
      if (s.relation.id == t.relation.id && s.subject.id != t.subject.id) return s;
    return t;
  };
  auto description_of = [&](const std::string& id) {
    auto it = labels.find(id);
    return it == labels.end() ? std::string() : it->second.description;
  };

  std::vector<std::vector<std::string>> results(samples.size());
  std::vector<char> failed(samples.size(), 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < samples.size(); i = next++) {
      const Triple& t = samples[i];
      const Triple& ex = example_for(t);
      VerbalizationPrompt p;
      p.subject = label_of(t.subject.id, labels);
      p.relation = label_of(t.relation.id, labels);
      p.object = render_object(t.object, labels);
      p.subject_def = description_of(t.subject.id);
      p.relation_def = description_of(t.relation.id);
      if (const EntityId* o = as_entity(t.object)) p.object_def = description_of(o->id);
      p.example_subject = label_of(ex.subject.id, labels);
      p.example_object = render_object(ex.object, labels);
      try {
        results[i] = request_verbalizations(p, client);
      } catch (const std::exception&) {
        failed[i] = 1;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::max<std::size_t>(1, parallelism); ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  std::map<std::string, std::vector<Template>> candidates;
  LlmTemplateStats local;
  local.requests = samples.size();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (failed[i]) {
      ++local.failed;
      continue;
    }
    const Triple& t = samples[i];
    const std::string subj = label_of(t.subject.id, labels);
    const std::string obj = render_object(t.object, labels);
    for (const auto& sentence : results[i]) {
      if (auto tpl = extract_template(sentence, subj, obj)) {
        candidates[t.relation.id].push_back(Template{t.relation, *tpl, 1});
        ++local.accepted_sentences;
      }
    }
  }
  if (stats) *stats = local;
  TemplateStore store;
  for (auto& [rel, cands] : candidates) {
    auto selected = select_templates(RelationId(rel), cands);
    if (!selected.empty()) store[rel] = std::move(selected);
  }
  return store;
}

}  // namespace factdelta
