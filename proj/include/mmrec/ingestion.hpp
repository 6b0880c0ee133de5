#pragma once

// Raw file parsing and the catalog pre-filter: items lacking a usable image
// URL or description are removed together with all their interactions.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "mmrec/core.hpp"

namespace mmrec {

inline void trim_spaces(std::string& s) {
  const auto b = s.find_first_not_of(' ');
  if (b == std::string::npos) {
    s.clear();
    return;
  }
  s = s.substr(b, s.find_last_not_of(' ') - b + 1);
}

/// TSV: user<TAB>item[<TAB>rating[<TAB>timestamp]], no header. Blank lines
/// are skipped, trailing columns ignored, spaces around tokens trimmed.
inline InteractionSet parse_interactions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  InteractionSet out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto tab1 = line.find('\t');
    if (tab1 == std::string::npos)
      throw Error(ErrorCode::Malformed, "line " + std::to_string(line_no));
    const auto tab2 = line.find('\t', tab1 + 1);
    std::string user = line.substr(0, tab1);
    std::string item = line.substr(tab1 + 1, tab2 == std::string::npos
                                                 ? std::string::npos
                                                 : tab2 - tab1 - 1);
    trim_spaces(user);
    trim_spaces(item);
    if (user.empty() || item.empty())
      throw Error(ErrorCode::Malformed, "line " + std::to_string(line_no));
    out.add({std::move(user), std::move(item)});
  }
  if (in.bad()) throw Error(ErrorCode::Io, "read failed: " + path.string());
  return out;
}

inline void write_interactions(const InteractionSet& set,
                               const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  for (const auto& [u, i] : set.entries()) out << u << '\t' << i << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

/// JSON-lines with keys item (required), imUrl and description (optional).
/// Any other scalar keys are kept in ItemMetadata::extra as strings.
inline std::vector<ItemMetadata> parse_item_metadata(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<ItemMetadata> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto malformed = [&] {
      return Error(ErrorCode::Malformed, "line " + std::to_string(line_no));
    };
    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) throw malformed();
    auto item = obj.find("item");
    if (item == obj.end() || !item->is_string() ||
        item->get<std::string>().empty())
      throw malformed();
    ItemMetadata md;
    md.item_token = item->get<std::string>();
    if (!seen.insert(md.item_token).second)
      throw Error(ErrorCode::DuplicateItem, md.item_token);
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (it.key() == "item") continue;
      if (it->is_null()) continue;
      std::string value = it->is_string() ? it->get<std::string>() : it->dump();
      if (it.key() == "imUrl")
        md.image_url = std::move(value);
      else if (it.key() == "description")
        md.description = std::move(value);
      else
        md.extra.emplace(it.key(), std::move(value));
    }
    out.push_back(std::move(md));
  }
  return out;
}

/// Syntactic check only: http(s) scheme followed by a non-empty host.
inline bool syntactic_url_check(const std::string& url) {
  for (std::string_view scheme : {"http://", "https://"}) {
    if (url.size() > scheme.size() && url.compare(0, scheme.size(), scheme) == 0) {
      const char c = url[scheme.size()];
      return c != '/' && !std::isspace(static_cast<unsigned char>(c));
    }
  }
  return false;
}

/// Empty, whitespace-only, or the literal "nan" in any case.
inline bool is_invalid_description(const std::optional<std::string>& text) {
  if (!text) return true;
  const auto first = text->find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return true;
  const auto last = text->find_last_not_of(" \t\r\n");
  std::string trimmed = text->substr(first, last - first + 1);
  std::transform(trimmed.begin(), trimmed.end(), trimmed.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return trimmed == "nan";
}

struct FilterReport {
  std::size_t items_removed_missing_visual = 0;
  std::size_t items_removed_missing_textual = 0;
  std::size_t items_removed_missing_metadata = 0;
  std::size_t interactions_dropped = 0;
  std::size_t items_before = 0;
  std::size_t items_after = 0;
  std::size_t users_before = 0;
  std::size_t users_after = 0;
  std::vector<std::string> removed_items;  // sorted, each once
};

using UrlValidity = std::function<bool(const std::string& item_token,
                                       const std::string& url)>;

inline UrlValidity default_url_validity() {
  return [](const std::string&, const std::string& url) {
    return syntactic_url_check(url);
  };
}

struct PrefilterResult {
  InteractionSet interactions;
  FilterReport report;
};

inline PrefilterResult prefilter(const InteractionSet& interactions,
                                 const std::vector<ItemMetadata>& metadata,
                                 const UrlValidity& url_valid = default_url_validity()) {
  std::unordered_map<std::string_view, const ItemMetadata*> by_token;
  for (const auto& md : metadata) by_token.emplace(md.item_token, &md);

  PrefilterResult result;
  FilterReport& rep = result.report;
  rep.items_before = interactions.num_items();
  rep.users_before = interactions.num_users();

  std::unordered_set<std::string> removed;
  for (const auto& item : interactions.items()) {
    auto it = by_token.find(item);
    if (it == by_token.end()) {
      ++rep.items_removed_missing_metadata;
      removed.insert(item);
      continue;
    }
    const ItemMetadata& md = *it->second;
    const bool bad_visual = !md.image_url || !url_valid(item, *md.image_url);
    const bool bad_textual = is_invalid_description(md.description);
    if (bad_visual) ++rep.items_removed_missing_visual;
    if (bad_textual) ++rep.items_removed_missing_textual;
    if (bad_visual || bad_textual) removed.insert(item);
  }

  result.interactions = interactions.filtered(
      [&](const InteractionSet::Entry& e) { return !removed.count(e.second); });
  rep.interactions_dropped =
      interactions.num_interactions() - result.interactions.num_interactions();
  rep.items_after = result.interactions.num_items();
  rep.users_after = result.interactions.num_users();
  rep.removed_items.assign(removed.begin(), removed.end());
  std::sort(rep.removed_items.begin(), rep.removed_items.end());
  return result;
}

/// Iterative k-core: repeatedly drops users/items below the minimum counts.
/// Zero disables a side.
inline InteractionSet kcore_filter(InteractionSet set, std::size_t min_user,
                                   std::size_t min_item) {
  for (;;) {
    InteractionSet next = set.filtered([&](const InteractionSet::Entry& e) {
      return set.items_of(e.first).size() >= min_user &&
             set.item_degree(e.second) >= min_item;
    });
    if (next.num_interactions() == set.num_interactions()) return next;
    set = std::move(next);
  }
}

inline nlohmann::json to_json(const FilterReport& r) {
  return {{"items_removed_missing_visual", r.items_removed_missing_visual},
          {"items_removed_missing_textual", r.items_removed_missing_textual},
          {"items_removed_missing_metadata", r.items_removed_missing_metadata},
          {"interactions_dropped", r.interactions_dropped},
          {"items_before", r.items_before},
          {"items_after", r.items_after},
          {"users_before", r.users_before},
          {"users_after", r.users_after},
          {"removed_items", r.removed_items}};
}

}  // namespace mmrec
