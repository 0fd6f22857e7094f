#include "halo/popecheck.hpp"

#include <algorithm>
#include <fstream>

#include "halo/error.hpp"
#include "halo/templates_embedded.hpp"
#include "halo/text.hpp"

namespace halo {
namespace {

using nlohmann::json;

ChatRequest lvlm_request(const ProbeTarget& target, const ImageRecord& record,
                         std::string prompt) {
  ChatRequest req;
  req.endpoint_id = target.endpoint_id;
  req.model_id = target.model_id;
  req.messages = {Message{Role::user, std::move(prompt)}};
  req.sampling = target.sampling;
  req.image = ImageRef{record.image_id, record.file_name};
  return req;
}

}  // namespace

void to_json(nlohmann::json& j, const ProbeResult& r) {
  j = json{{"image_id", r.image_id},
           {"item", r.item},
           {"asked", r.asked},
           {"answered_yes", r.answered_yes},
           {"answer_flagged", r.answer_flagged},
           {"caption_hallucinated", r.caption_hallucinated},
           {"raw_answer", r.raw_answer},
           {"description", r.description}};
}

void from_json(const nlohmann::json& j, ProbeResult& r) {
  r.image_id = j.at("image_id").get<ImageId>();
  r.item = j.at("item").get<std::string>();
  r.asked = j.at("asked").get<bool>();
  r.answered_yes = j.at("answered_yes").get<bool>();
  r.answer_flagged = j.value("answer_flagged", false);
  r.caption_hallucinated = j.at("caption_hallucinated").get<bool>();
  r.raw_answer = j.value("raw_answer", std::string{});
  r.description = j.value("description", std::string{});
}

double ProbeTally::yes_rate() const {
  return total.qh == 0 ? 0.0 : 100.0 * static_cast<double>(total.ay) / static_cast<double>(total.qh);
}

double ProbeTally::hallucination_rate() const {
  return total.ay == 0 ? 0.0 : 100.0 * static_cast<double>(total.ch) / static_cast<double>(total.ay);
}

void to_json(nlohmann::json& j, const ProbeTally& t) {
  json per = json::object();
  for (const auto& item : t.items) {
    const auto& c = t.per_item.at(item);
    per[item] = json{{"qh", c.qh}, {"ay", c.ay}, {"ch", c.ch}};
  }
  j = json{{"items", t.items},
           {"per_item", per},
           {"total", {{"qh", t.total.qh}, {"ay", t.total.ay}, {"ch", t.total.ch}}}};
}

void from_json(const nlohmann::json& j, ProbeTally& t) {
  t.items = j.at("items").get<std::vector<std::string>>();
  t.per_item.clear();
  for (const auto& item : t.items) {
    const auto& c = j.at("per_item").at(item);
    t.per_item[item] = {c.at("qh").get<std::size_t>(), c.at("ay").get<std::size_t>(),
                        c.at("ch").get<std::size_t>()};
  }
  const auto& tot = j.at("total");
  t.total = {tot.at("qh").get<std::size_t>(), tot.at("ay").get<std::size_t>(),
             tot.at("ch").get<std::size_t>()};
}

std::vector<std::string> absent_items(const ImageRecord& record,
                                      const std::vector<std::string>& items) {
  if (items.empty()) throw ArgumentError("absent_items needs a non-empty item list");
  std::vector<std::string> out;
  for (const auto& item : items) {
    const bool present = std::any_of(record.captions.begin(), record.captions.end(),
                                     [&](const std::string& c) { return text::mentions(c, item); });
    if (!present) out.push_back(item);
  }
  return out;
}

std::string probe_prompt(std::string_view item) {
  if (item.empty()) throw ArgumentError("probe item must not be empty");
  return text::substitute(templates::kProbe, "item", item);
}

YesAnswer answered_yes(std::string_view raw) {
  const std::string token = text::first_alpha_token(raw);
  if (token == "yes") return {true, false};
  if (token == "no") return {false, false};
  return {false, true};
}

bool caption_mentions(std::string_view description, std::string_view item) {
  return text::mentions(description, item);
}

std::pair<std::vector<ProbeResult>, std::size_t> ProbeStore::load() const {
  std::vector<ProbeResult> results_so_far;
  std::size_t next = 0;
  if (std::filesystem::exists(cursor)) {
    next = json::parse(text::read_file(cursor)).at("next_record").get<std::size_t>();
    std::ifstream in(results);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) results_so_far.push_back(json::parse(line).get<ProbeResult>());
    }
  }
  return {std::move(results_so_far), next};
}

void ProbeStore::append(std::span<const ProbeResult> chunk_results, std::size_t next_record) const {
  if (results.has_parent_path()) std::filesystem::create_directories(results.parent_path());
  {
    std::ofstream out(results, std::ios::app);
    if (!out) throw IoError("cannot append to " + results.string());
    for (const auto& r : chunk_results) out << json(r).dump() << '\n';
  }
  text::write_file(cursor, json{{"next_record", next_record}}.dump() + "\n");
}

std::vector<ProbeResult> run_probe(ChatClient& client, const ProbeTarget& target,
                                   std::span<const ImageRecord> records,
                                   const std::vector<std::string>& items,
                                   std::string_view describe_prompt, const ProbeStore* store,
                                   std::size_t chunk) {
  if (records.empty()) throw ArgumentError("run_probe needs at least one record");
  chunk = std::max<std::size_t>(1, chunk);
  std::vector<ProbeResult> all;
  std::size_t start = 0;
  if (store) std::tie(all, start) = store->load();

  for (std::size_t begin = start; begin < records.size(); begin += chunk) {
    const std::size_t end = std::min(records.size(), begin + chunk);

    // Probe questions for the whole chunk in one batch.
    std::vector<ProbeResult> results;
    std::vector<ChatRequest> probes;
    for (std::size_t i = begin; i < end; ++i) {
      for (const auto& item : absent_items(records[i], items)) {
        ProbeResult r;
        r.image_id = records[i].image_id;
        r.item = item;
        results.push_back(std::move(r));
        probes.push_back(lvlm_request(target, records[i], probe_prompt(item)));
      }
    }
    const auto answers = client.send_batch(probes);
    for (std::size_t k = 0; k < results.size(); ++k) {
      const YesAnswer yes = answered_yes(answers[k].text);
      results[k].raw_answer = answers[k].text;
      results[k].answered_yes = yes.yes;
      results[k].answer_flagged = yes.flagged;
    }

    // One description per image with at least one affirmed item.
    std::vector<ChatRequest> describe;
    std::vector<ImageId> described;
    for (std::size_t i = begin; i < end; ++i) {
      const ImageId id = records[i].image_id;
      const bool any_yes = std::any_of(results.begin(), results.end(), [&](const ProbeResult& r) {
        return r.image_id == id && r.answered_yes;
      });
      if (!any_yes) continue;
      describe.push_back(lvlm_request(target, records[i], std::string(describe_prompt)));
      described.push_back(id);
    }
    const auto descriptions = client.send_batch(describe);
    for (std::size_t d = 0; d < described.size(); ++d) {
      for (auto& r : results) {
        if (r.image_id != described[d] || !r.answered_yes) continue;
        r.description = descriptions[d].text;
        r.caption_hallucinated = caption_mentions(descriptions[d].text, r.item);
      }
    }

    if (store) store->append(results, end);
    all.insert(all.end(), results.begin(), results.end());
  }
  return all;
}

ProbeTally tally(std::span<const ProbeResult> results, const std::vector<std::string>& items) {
  ProbeTally t;
  t.items = items;
  for (const auto& item : items) t.per_item[item] = {};
  for (const auto& r : results) {
    if (!t.per_item.count(r.item)) {
      t.items.push_back(r.item);
      t.per_item[r.item] = {};
    }
    auto& c = t.per_item[r.item];
    if (r.asked) ++c.qh;
    if (r.asked && r.answered_yes) ++c.ay;
    if (r.asked && r.answered_yes && r.caption_hallucinated) ++c.ch;
  }
  for (const auto& item : t.items) {
    const auto& c = t.per_item[item];
    t.total.qh += c.qh;
    t.total.ay += c.ay;
    t.total.ch += c.ch;
  }
  return t;
}

}  // namespace halo
