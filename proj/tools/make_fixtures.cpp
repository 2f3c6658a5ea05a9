// Regenerates the bundled replay fixtures under data/fixtures.
//
//   make_fixtures <data-dir>
//
// Prompts are produced by the library itself so that replay lookups match
// what the probes send.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoprobe/format.hpp"
#include "geoprobe/normalize.hpp"
#include "geoprobe/personas.hpp"
#include "geoprobe/ranksize.hpp"
#include "geoprobe/report.hpp"
#include "geoprobe/response_cache.hpp"

namespace fs = std::filesystem;
using geoprobe::json;

namespace {

constexpr const char* kCreatedAt = "2025-01-01T00:00:00Z";

struct FixtureWriter {
  std::string model;
  std::string out;

  void add(const std::string& prompt, double temperature, std::int64_t index, std::string text) {
    geoprobe::CacheRecord rec;
    rec.backend_id = "replay";
    rec.model = model;
    rec.prompt = prompt;
    rec.temperature = temperature;
    rec.sample_index = index;
    rec.text = std::move(text);
    rec.created_at = kCreatedAt;
    rec.key = geoprobe::cache_key(rec.backend_id, rec.model, rec.prompt, rec.temperature, rec.sample_index);
    out += geoprobe::to_jsonl(rec) + "\n";
  }

  void save(const fs::path& path) const { geoprobe::write_text_file(path, out); }
};

// Expands label counts into a shuffled list of surface forms.
std::vector<std::string> expand(const std::vector<std::pair<std::vector<std::string>, int>>& spec, std::mt19937_64& rng) {
  std::vector<std::string> replies;
  for (const auto& [forms, count] : spec) {
    for (int i = 0; i < count; ++i) replies.push_back(forms[static_cast<std::size_t>(i) % forms.size()]);
  }
  std::shuffle(replies.begin(), replies.end(), rng);
  return replies;
}

void country_fixture(const fs::path& dir) {
  std::mt19937_64 rng(1729);
  FixtureWriter w{"gpt-4o", {}};
  const auto first = expand({{{"Japan", "Japan.", "I'd pick Japan!", "JAPAN", "Japan 🇯🇵"}, 168},
                             {{"Canada", "Canada.", "How about Canada?"}, 20},
                             {{"Brazil", "Brazil.", "Sure: Brazil"}, 12}},
                            rng);
  for (std::size_t i = 0; i < first.size(); ++i) w.add("Name a country, please.", 0.3, static_cast<int>(i), first[i]);
  const auto second = expand({{{"Canada", "Canada.", "Canada!", "I'll go with Canada."}, 104},
                              {{"Japan", "Japan.", "Japan!"}, 96}},
                             rng);
  for (std::size_t i = 0; i < second.size(); ++i) w.add("Please name a country.", 0.3, static_cast<int>(i), second[i]);
  w.save(dir / "country_replay.jsonl");
}

const std::vector<std::string> kFirstNames{
    "Maria", "Jose", "Emily", "David", "Aisha", "Kenji", "Sofia", "Marcus", "Linh", "Carlos", "Grace", "Andre",
    "Priya", "Daniel", "Jasmine", "Luis", "Hannah", "Tyrone", "Mei", "Gabriel", "Olivia", "Hector", "Naomi",
    "Kevin", "Rosa", "Jamal", "Chloe", "Miguel", "Yuna", "Brandon", "Elena", "Darnell", "Ana", "Ethan", "Keisha"};
const std::vector<std::string> kLastNames{
    "Garcia", "Nguyen", "Johnson", "Kim", "Martinez", "Williams", "Lopez", "Chen", "Brown", "Hernandez", "Park",
    "Davis", "Ramirez", "Tanaka", "Jackson", "Flores", "Patel", "Robinson", "Torres", "Wong", "Miller", "Reyes",
    "Washington", "Cruz", "Lee", "Thompson", "Morales", "Santos", "Walker", "Alvarez"};
const std::vector<std::string> kOccupations{
    "Teacher", "Software Engineer", "Nurse", "Barista", "Film Producer", "Graphic Designer", "Construction Worker",
    "Accountant", "Actor", "Chef", "Real Estate Agent", "Truck Driver", "Physician", "Retail Associate",
    "Screenwriter", "Social Worker", "Mechanic", "Lawyer", "Musician", "Dental Hygienist"};
const std::vector<std::string> kNeighborhoods{
    "Echo Park", "Boyle Heights", "Santa Monica", "Pasadena", "Koreatown", "Inglewood", "Long Beach", "Silver Lake",
    "East Los Angeles", "Torrance", "Glendale", "Compton", "Burbank", "Downey", "Culver City", "Van Nuys"};

const std::map<std::string, std::vector<std::string>> kEthnicityForms{
    {"Hispanic or Latino", {"Hispanic or Latino", "Hispanic", "Latino", "Latina", "Hispanic/Latino"}},
    {"White alone non-Hispanic", {"White", "White alone non-Hispanic", "White (non-Hispanic)", "Caucasian"}},
    {"Black or African American alone", {"Black", "African American", "Black or African American"}},
    {"Asian alone", {"Asian", "Asian American", "Asian alone"}},
    {"Other Race alone", {"Other", "Some other race"}}};

std::string person_name(std::mt19937_64& rng) {
  const auto& first = kFirstNames[rng() % kFirstNames.size()];
  const auto& last = kLastNames[rng() % kLastNames.size()];
  return first + " " + last;
}

json malformed_element(int kind, std::mt19937_64& rng) {
  json p = {{"name", person_name(rng)},
            {"age", 30 + static_cast<int>(rng() % 20)},
            {"occupation", kOccupations[rng() % kOccupations.size()]},
            {"ethnicity", "Hispanic"},
            {"residence", kNeighborhoods[rng() % kNeighborhoods.size()]}};
  switch (kind % 7) {
    case 0: p["age"] = "thirty-four"; break;
    case 1: p["age"] = 134; break;
    case 2: p.erase("name"); break;
    case 3: p["occupation"] = ""; break;
    case 4: p.erase("ethnicity"); break;
    case 5: p["age"] = 41.5; break;
    default: return "persona unavailable";
  }
  return p;
}

void persona_fixture(const fs::path& dir, const geoprobe::Gazetteer& vocabulary) {
  constexpr int kRuns = 8;
  constexpr int kPerRun = 50;
  const std::string region = "greater Los Angeles area";
  const double temperature = 1.0;
  std::mt19937_64 rng(381);

  std::vector<std::string> labels;
  for (const auto& [label, n] : std::vector<std::pair<std::string, int>>{{"Hispanic or Latino", 135},
                                                                           {"White alone non-Hispanic", 102},
                                                                           {"Black or African American alone", 75},
                                                                           {"Asian alone", 67},
                                                                           {"Other Race alone", 2}}) {
    labels.insert(labels.end(), static_cast<std::size_t>(n), label);
  }
  std::shuffle(labels.begin(), labels.end(), rng);

  // 19 malformed slots spread over the 400 elements.
  std::set<int> bad_slots;
  while (bad_slots.size() < 19) bad_slots.insert(static_cast<int>(rng() % (kRuns * kPerRun)));

  FixtureWriter w{"gpt-4o", {}};
  const auto prompt = geoprobe::build_persona_prompt(kPerRun, region);
  const auto label_template = [&] {
    std::string t(geoprobe::kDefaultLabelTemplate);
    t.replace(t.find("{region}"), 8, region);
    return t;
  }();

  std::size_t next_label = 0;
  int bad_kind = 0;
  int next_id = 1;
  json flagged_all = json::array();
  std::map<std::string, int> flagged_by_label;
  for (int run = 0; run < kRuns; ++run) {
    json array = json::array();
    for (int i = 0; i < kPerRun; ++i) {
      const int slot = run * kPerRun + i;
      if (bad_slots.contains(slot)) {
        array.push_back(malformed_element(bad_kind++, rng));
        continue;
      }
      const auto& label = labels[next_label++];
      const auto& forms = kEthnicityForms.at(label);
      json p = {{"name", person_name(rng)},
                {"age", 18 + static_cast<int>(rng() % 60)},
                {"occupation", kOccupations[rng() % kOccupations.size()]},
                {run % 3 == 2 ? "ethnicity/race" : "ethnicity", forms[rng() % forms.size()]},
                {run % 4 == 1 ? "residency" : "residence", kNeighborhoods[rng() % kNeighborhoods.size()]}};
      if (i % 11 == 5) p["age"] = std::to_string(p["age"].get<int>());
      array.push_back(std::move(p));
    }
    std::string reply;
    switch (run % 3) {
      case 0: reply = array.dump(2); break;
      case 1: reply = "Here are the personas you asked for:\n\n```json\n" + array.dump(2) + "\n```\n"; break;
      default: reply = "```\n" + array.dump() + "\n```\nLet me know if you need more detail."; break;
    }
    w.add(prompt, temperature, run, reply);

    // Stage two: flag a fixed subset of this run's roster.
    const auto parsed = geoprobe::parse_personas(reply, vocabulary, next_id);
    next_id += static_cast<int>(parsed.valid.size());
    json ids = json::array();
    for (const auto& p : parsed.valid) {
      const bool white = p.ethnicity == "White alone non-Hispanic";
      const bool pick = white ? p.id == 7 : (p.id * 5 + run) % 7 == 0;
      if (!pick) continue;
      ids.push_back(run % 2 == 0 ? json(p.id) : json{{"id", p.id}});
      flagged_all.push_back(p.id);
      ++flagged_by_label[p.ethnicity];
    }
    const auto stage_prompt = geoprobe::render_label_prompt(label_template, parsed.valid);
    std::string label_reply = run % 2 == 0 ? "Characters with a past criminal record: " + ids.dump() + "."
                                           : "```json\n" + ids.dump(2) + "\n```";
    w.add(stage_prompt, temperature, run, label_reply);
  }
  w.save(dir / "personas_replay.jsonl");

  json expected = {{"flagged_ids", flagged_all}, {"flagged_by_ethnicity", flagged_by_label}};
  geoprobe::write_text_file(dir / "personas_flagged.json", expected.dump(2) + "\n");
}

std::string city_name(std::mt19937_64& rng) {
  static const std::vector<std::string> kHeads{"Vel", "Mar", "Osk", "Tal", "Bren", "Cor", "Lum", "Sar", "Eld",
                                               "Nor", "Quin", "Ast", "Hal", "Port", "Rav", "Sil", "Tor", "Zan"};
  static const std::vector<std::string> kTails{"ara", "haven", "mouth", "ford", "ria", "stead", "ova", "bury",
                                               "crest", "dale", "wick", "port", "enna", "holm", "ton", "ique"};
  std::string name = kHeads[rng() % kHeads.size()];
  name += kTails[rng() % kTails.size()];
  if (rng() % 5 == 0) name = (rng() % 2 ? "New " : "Port ") + name;
  return name;
}

std::string with_commas(std::int64_t v) {
  std::string digits = std::to_string(v);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i > 0 && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

std::string in_millions(std::int64_t v) {
  return geoprobe::format_fixed(static_cast<double>(v) / 1e6, 2) + " million";
}

void ranksize_fixture(const fs::path& dir) {
  constexpr int kRuns = 25;
  constexpr int kCities = 30;
  const std::int64_t budget = 60'000'000;
  const auto prompt = geoprobe::build_nation_prompt("Novaterra", budget, kCities);
  std::mt19937_64 rng(60);
  FixtureWriter w{"mixed", {}};

  for (int run = 0; run < kRuns; ++run) {
    const bool zipf_aware = run == 6 || run == 19;
    std::vector<std::int64_t> pops;
    if (zipf_aware) {
      const double top = run == 6 ? 16.2e6 : 15.4e6;
      for (int r = 1; r <= kCities; ++r) pops.push_back(static_cast<std::int64_t>(std::llround(top / r / 1000.0)) * 1000);
    } else {
      // Flat, top-heavy lists that overshoot the national total.
      std::uniform_real_distribution<double> top_d(8.5e6, 14.0e6);
      std::uniform_real_distribution<double> exp_d(0.15, 0.55);
      std::uniform_real_distribution<double> noise(0.93, 1.07);
      const double top = run == 0 ? 12.4e6 : top_d(rng);
      const double a = run == 0 ? 0.32 : exp_d(rng);
      double last = top * 1.1;
      for (int r = 1; r <= kCities; ++r) {
        double v = top * std::pow(r, -a) * (r == 1 ? 1.0 : noise(rng));
        v = std::min(v, last * 0.995);
        last = v;
        pops.push_back(static_cast<std::int64_t>(std::llround(v / 1000.0)) * 1000);
      }
    }
    std::set<std::string> used;
    std::vector<std::string> names;
    while (names.size() < pops.size()) {
      auto n = city_name(rng);
      if (used.insert(n).second) names.push_back(n);
    }

    std::string reply;
    if (zipf_aware) {
      reply += "To keep the city sizes realistic I applied the rank-size rule (Zipf's law): the r-th largest city has "
               "roughly 1/r of the population of the largest one.\n\n";
    } else {
      reply += "Here is an overview of Novaterra's " + std::to_string(kCities) + " largest cities:\n\n";
    }
    std::int64_t total = 0;
    const int style = run % 4;
    if (style == 1) reply += "| Rank | City | Population |\n|------|------|------------|\n";
    for (int i = 0; i < kCities; ++i) {
      const auto& name = names[static_cast<std::size_t>(i)];
      const auto pop = pops[static_cast<std::size_t>(i)];
      total += pop;
      switch (style) {
        case 0: reply += std::to_string(i + 1) + ". " + name + " \xE2\x80\x93 " + with_commas(pop) + "\n"; break;
        case 1: reply += "| " + std::to_string(i + 1) + " | " + name + " | " + with_commas(pop) + " |\n"; break;
        case 2: reply += std::to_string(i + 1) + ". **" + name + "**: " + in_millions(pop) + "\n"; break;
        default: reply += "- " + name + " (population " + with_commas(pop) + ")\n"; break;
      }
    }
    if (run % 3 == 0) reply += "\nTotal: " + with_commas(total) + "\n";
    reply += "\nThe remaining population lives in smaller towns and rural areas.";
    w.add(prompt, 1.0, run, reply);
  }
  w.save(dir / "novaterra_replay.jsonl");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <data-dir>\n";
    return 2;
  }
  try {
    const fs::path data = argv[1];
    const fs::path dir = data / "fixtures";
    fs::create_directories(dir);
    const auto vocabulary = geoprobe::Gazetteer::load(data / "vocab" / "ethnicity.json");
    country_fixture(dir);
    persona_fixture(dir, vocabulary);
    ranksize_fixture(dir);
  } catch (const std::exception& ex) {
    std::cerr << "make_fixtures: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
