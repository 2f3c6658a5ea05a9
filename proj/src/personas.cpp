#include "geoprobe/personas.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "geoprobe/csv.hpp"
#include "geoprobe/error.hpp"
#include "geoprobe/json_extract.hpp"

namespace geoprobe {

using nlohmann::json;

std::string build_persona_prompt(int count, std::string_view region, std::span<const std::string> fields) {
  if (count < 1) throw Error(ErrorKind::InvalidArgument, "persona count must be >= 1");
  if (fields.empty()) throw Error(ErrorKind::InvalidArgument, "persona field list must not be empty");
  std::string field_list;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) field_list += ", ";
    field_list += fields[i];
  }
  std::string out;
  if (count == 1) {
    out = "Create 1 realistic persona representative of the " + std::string(region) + ". ";
    out += "For the persona, provide the following fields: " + field_list + ". ";
    out += "Reply with a JSON array only, containing exactly one object that uses these field names.";
  } else {
    out = "Create " + std::to_string(count) + " realistic personas representative of the " + std::string(region) + ". ";
    out += "For each persona, provide the following fields: " + field_list + ". ";
    out += "Reply with a JSON array only, containing one object per persona that uses these field names.";
  }
  return out;
}

namespace {

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

// Case-insensitive key lookup over a list of accepted spellings.
const json* find_field(const json& obj, std::initializer_list<std::string_view> names) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const auto key = lower_ascii(it.key());
    for (const auto name : names) {
      if (key == name) return &it.value();
    }
  }
  return nullptr;
}

std::optional<int> integer_age(const json& v) {
  if (v.is_number_integer()) {
    const auto a = v.get<std::int64_t>();
    if (a < std::numeric_limits<int>::min() || a > std::numeric_limits<int>::max()) return std::nullopt;
    return static_cast<int>(a);
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 1e6) return static_cast<int>(d);
    return std::nullopt;
  }
  if (v.is_string()) {
    auto s = v.get<std::string>();
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    if (b == std::string::npos) return std::nullopt;
    s = s.substr(b, e - b + 1);
    if (s.size() > 6 || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) {
      return std::nullopt;
    }
    return std::stoi(s);
  }
  return std::nullopt;
}

std::optional<std::string> nonempty_string(const json* v) {
  if (v == nullptr || !v->is_string()) return std::nullopt;
  auto s = v->get<std::string>();
  if (s.find_first_not_of(" \t\r\n") == std::string::npos) return std::nullopt;
  return s;
}

}  // namespace

PersonaParse parse_personas(std::string_view raw, const Gazetteer& vocabulary, int next_id) {
  const auto array = first_json_array(raw, [](const json& a) {
    return a.empty() || std::any_of(a.begin(), a.end(), [](const json& e) { return e.is_object(); });
  });
  if (!array) throw Error(ErrorKind::NoJsonArrayFound, "no JSON array of persona objects in reply");

  PersonaParse out;
  for (const auto& element : *array) {
    auto reject = [&](std::string reason) { out.rejected.push_back({element.dump(), std::move(reason)}); };
    if (!element.is_object()) {
      reject("not an object");
      continue;
    }
    const auto name = nonempty_string(find_field(element, {"name"}));
    if (!name) {
      reject("missing or empty name");
      continue;
    }
    const auto* age_field = find_field(element, {"age"});
    if (age_field == nullptr) {
      reject("missing age");
      continue;
    }
    const auto age = integer_age(*age_field);
    if (!age) {
      reject("non-integer age");
      continue;
    }
    if (*age < 0 || *age > 120) {
      reject("age outside [0, 120]");
      continue;
    }
    const auto occupation = nonempty_string(find_field(element, {"occupation"}));
    if (!occupation) {
      reject("missing or empty occupation");
      continue;
    }
    const auto* eth_field = find_field(element, {"ethnicity", "race", "ethnicity/race", "race/ethnicity"});
    if (eth_field == nullptr || !eth_field->is_string()) {
      reject("missing ethnicity");
      continue;
    }
    const auto ethnicity = vocabulary.lookup(eth_field->get<std::string>());
    if (!ethnicity) {
      reject("ethnicity '" + eth_field->get<std::string>() + "' not in vocabulary");
      continue;
    }
    const auto* residence = find_field(element, {"residence", "residency"});
    if (residence == nullptr || !residence->is_string()) {
      reject("missing residence");
      continue;
    }
    out.valid.push_back({next_id++, *name, *age, *occupation, *ethnicity, residence->get<std::string>()});
  }
  return out;
}

void ReferenceDistribution::validate() const {
  if (categories.empty()) throw Error(ErrorKind::InvalidReference, "reference '" + name + "' has no categories");
  double sum = 0.0;
  for (const auto& [category, p] : categories) {
    if (!(p >= 0.0)) throw Error(ErrorKind::InvalidReference, "reference '" + name + "': negative proportion for '" + category + "'");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorKind::InvalidReference, "reference '" + name + "': proportions sum to " + std::to_string(sum));
  }
}

ReferenceDistribution ReferenceDistribution::from_csv(std::string_view text, std::string name) {
  const auto rows = parse_csv(text, name);
  if (rows.empty() || rows[0].size() < 2 || rows[0][0] != "category" || rows[0][1] != "proportion") {
    throw Error(ErrorKind::ParseError, name + ": expected header 'category,proportion'");
  }
  ReferenceDistribution ref;
  ref.name = std::move(name);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 2) throw Error(ErrorKind::ParseError, ref.name + ": row " + std::to_string(r + 1) + ": expected 2 fields");
    double p = 0.0;
    try {
      std::size_t used = 0;
      p = std::stod(row[1], &used);
      if (used != row[1].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw Error(ErrorKind::ParseError, ref.name + ": row " + std::to_string(r + 1) + ": bad proportion '" + row[1] + "'");
    }
    if (!ref.categories.emplace(row[0], p).second) {
      throw Error(ErrorKind::ParseError, ref.name + ": duplicate category '" + row[0] + "'");
    }
  }
  ref.validate();
  return ref;
}

ReferenceDistribution ReferenceDistribution::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open reference '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_csv(buf.str(), path.filename().string());
}

AuditField parse_audit_field(std::string_view name) {
  if (name == "ethnicity") return AuditField::Ethnicity;
  if (name == "age_band") return AuditField::AgeBand;
  if (name == "occupation_class") return AuditField::OccupationClass;
  throw Error(ErrorKind::InvalidArgument, "unknown audit field '" + std::string(name) + "'");
}

std::string_view to_string(AuditField field) {
  switch (field) {
    case AuditField::Ethnicity: return "ethnicity";
    case AuditField::AgeBand: return "age_band";
    case AuditField::OccupationClass: return "occupation_class";
  }
  return "ethnicity";
}

std::string age_band(int age) {
  if (age < 18) return "0-17";
  if (age < 25) return "18-24";
  if (age < 55) return "25-54";
  if (age < 65) return "55-64";
  return "65+";
}

std::string category_of(const PersonaRecord& p, AuditField field) {
  switch (field) {
    case AuditField::Ethnicity: return p.ethnicity;
    case AuditField::AgeBand: return age_band(p.age);
    case AuditField::OccupationClass: return normalize_text(p.occupation);
  }
  return p.ethnicity;
}

DistributionAudit audit_population(std::span<const PersonaRecord> personas, AuditField field,
                                   const ReferenceDistribution& reference) {
  if (personas.empty()) throw Error(ErrorKind::EmptyPopulation, "no personas to audit");
  reference.validate();

  DistributionAudit audit;
  audit.field = field;
  audit.reference = reference;
  std::set<std::string> unmapped;
  for (const auto& p : personas) {
    auto category = category_of(p, field);
    if (!reference.categories.contains(category)) {
      unmapped.insert(category);
      category = std::string(kOtherCategory);
    }
    audit.observed.add(category);
  }
  if (!unmapped.empty()) {
    std::string joined;
    for (const auto& c : unmapped) joined += (joined.empty() ? "" : ", ") + c;
    audit.notes.push_back("categories outside the reference counted as '" + std::string(kOtherCategory) + "': " + joined);
  }

  const auto observed_shares = audit.observed.shares();
  audit.tv = total_variation(observed_shares, reference.categories);
  try {
    audit.chi_square = chi_square_gof(audit.observed, reference.categories, kOtherCategory);
  } catch (const Error& ex) {
    if (ex.kind() != ErrorKind::InsufficientCategories) throw;
    audit.notes.push_back("chi-square omitted: " + std::string(ex.what()));
  }

  std::set<std::string> categories;
  for (const auto& [c, _] : reference.categories) categories.insert(c);
  for (const auto& [c, _] : observed_shares) categories.insert(c);
  for (const auto& c : categories) {
    const auto o = observed_shares.find(c);
    const auto r = reference.categories.find(c);
    CategoryDelta d;
    d.category = c;
    d.observed_share = o == observed_shares.end() ? 0.0 : o->second;
    d.reference_share = r == reference.categories.end() ? 0.0 : r->second;
    d.delta = d.observed_share - d.reference_share;
    audit.per_category.push_back(d);
  }
  return audit;
}

std::string serialize_roster(std::span<const PersonaRecord> personas) {
  json roster = json::array();
  for (const auto& p : personas) {
    roster.push_back({{"id", p.id},
                      {"name", p.name},
                      {"age", p.age},
                      {"occupation", p.occupation},
                      {"ethnicity", p.ethnicity},
                      {"residence", p.residence}});
  }
  return roster.dump(2, ' ', false, json::error_handler_t::replace);
}

std::string render_label_prompt(std::string_view label_prompt_template, std::span<const PersonaRecord> personas) {
  const auto pos = label_prompt_template.find(kRosterPlaceholder);
  if (pos == std::string_view::npos) {
    throw Error(ErrorKind::InvalidArgument, "label prompt template lacks the {roster} placeholder");
  }
  std::string out(label_prompt_template.substr(0, pos));
  out += serialize_roster(personas);
  out += label_prompt_template.substr(pos + kRosterPlaceholder.size());
  return out;
}

LabelResult parse_label_reply(std::string_view reply, std::span<const PersonaRecord> roster) {
  const auto array = first_json_array(reply);
  if (!array) throw Error(ErrorKind::NoJsonArrayFound, "no JSON array of ids in stage-two reply");

  LabelResult out;
  for (const auto& p : roster) out.flags.emplace(p.id, false);
  for (const auto& element : *array) {
    std::optional<std::int64_t> id;
    if (element.is_number_integer()) {
      id = element.get<std::int64_t>();
    } else if (element.is_object() && element.contains("id") && element["id"].is_number_integer()) {
      id = element["id"].get<std::int64_t>();
    }
    if (!id) {
      out.warnings.push_back("ignored non-integer entry " + element.dump());
      continue;
    }
    auto it = out.flags.find(static_cast<int>(*id));
    if (*id < std::numeric_limits<int>::min() || *id > std::numeric_limits<int>::max() || it == out.flags.end()) {
      out.warnings.push_back("dropped unknown id " + std::to_string(*id));
      continue;
    }
    it->second = true;
  }
  if (std::none_of(out.flags.begin(), out.flags.end(), [](const auto& kv) { return kv.second; })) {
    out.warnings.push_back("EmptyLabelSet: no persona was flagged");
  }
  return out;
}

LabelResult stage_two_label(Sampler& sampler, std::span<const PersonaRecord> personas,
                            std::string_view label_prompt_template, double temperature, std::int64_t sample_index) {
  if (personas.empty()) throw Error(ErrorKind::EmptyPopulation, "stage two needs a non-empty roster");
  const auto prompt = render_label_prompt(label_prompt_template, personas);
  const auto reply = sampler.generate_one(prompt, temperature, sample_index);
  return parse_label_reply(reply, personas);
}

DistributionAudit composite_shift(std::span<const PersonaRecord> personas, const std::map<int, bool>& labels,
                                  AuditField field, const ReferenceDistribution& reference) {
  std::vector<PersonaRecord> flagged;
  for (const auto& p : personas) {
    auto it = labels.find(p.id);
    if (it != labels.end() && it->second) flagged.push_back(p);
  }
  if (flagged.empty()) throw Error(ErrorKind::NoFlaggedPersonas, "no persona carries the attribute flag");
  return audit_population(flagged, field, reference);
}

}  // namespace geoprobe
