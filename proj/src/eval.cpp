/*
 * Copyright 2026 The Latte Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <unordered_set>

#include <json.hpp>

#include "binio.hpp"

namespace latte {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.emplace_back(line.substr(start, i - start));
  }
  return out;
}

template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
  std::string content = read_file(path);
  size_t line_no = 0, pos = 0;
  while (pos < content.size()) {
    size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) nl = content.size();
    ++line_no;
    std::string_view line(content.data() + pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = nl + 1;
    if (!line.empty()) fn(line_no, line);
  }
}

long parse_int(std::string_view s, const std::string& path, size_t line_no) {
  try {
    size_t used = 0;
    long v = std::stol(std::string(s), &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Format,
                path + ":" + std::to_string(line_no) + ": expected an integer, got \"" +
                    std::string(s) + "\"");
  }
}

double parse_double(std::string_view s, const std::string& path, size_t line_no) {
  try {
    size_t used = 0;
    double v = std::stod(std::string(s), &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Format,
                path + ":" + std::to_string(line_no) + ": expected a number, got \"" +
                    std::string(s) + "\"");
  }
}

}  // namespace

int Qrels::grade(const std::string& query_id, const std::string& doc_id) const {
  auto q = grades.find(query_id);
  if (q == grades.end()) return 0;
  auto d = q->second.find(doc_id);
  return d == q->second.end() ? 0 : d->second;
}

size_t Qrels::relevant_count(const std::string& query_id, int min_rel) const {
  auto q = grades.find(query_id);
  if (q == grades.end()) return 0;
  size_t n = 0;
  for (const auto& [doc, g] : q->second)
    if (g >= min_rel) ++n;
  return n;
}

double rr_at_k(const RankedList& ranked, const Qrels& qrels, uint32_t k, int min_rel) {
  if (k < 1) throw Error(ErrorCode::Config, "k must be >= 1");
  size_t depth = std::min<size_t>(k, ranked.entries.size());
  for (size_t i = 0; i < depth; ++i)
    if (qrels.grade(ranked.query_id, ranked.entries[i].doc_id) >= min_rel)
      return 1.0 / double(i + 1);
  return 0.0;
}

double ndcg_at_k(const RankedList& ranked, const Qrels& qrels, uint32_t k) {
  if (k < 1) throw Error(ErrorCode::Config, "k must be >= 1");
  auto q = qrels.grades.find(ranked.query_id);
  if (q == qrels.grades.end()) return 0.0;

  double dcg = 0.0;
  size_t depth = std::min<size_t>(k, ranked.entries.size());
  for (size_t i = 0; i < depth; ++i) {
    auto d = q->second.find(ranked.entries[i].doc_id);
    if (d != q->second.end() && d->second > 0)
      dcg += double(d->second) / std::log2(double(i + 2));
  }

  std::vector<int> ideal;
  ideal.reserve(q->second.size());
  for (const auto& [doc, g] : q->second)
    if (g > 0) ideal.push_back(g);
  std::sort(ideal.begin(), ideal.end(), std::greater<int>());
  double idcg = 0.0;
  for (size_t i = 0; i < std::min<size_t>(k, ideal.size()); ++i)
    idcg += double(ideal[i]) / std::log2(double(i + 2));

  return idcg == 0.0 ? 0.0 : dcg / idcg;
}

std::optional<double> recall_at_k(const RankedList& ranked, const Qrels& qrels, uint32_t k,
                                  int min_rel) {
  if (k < 1) throw Error(ErrorCode::Config, "k must be >= 1");
  size_t denom = qrels.relevant_count(ranked.query_id, min_rel);
  if (denom == 0) return std::nullopt;
  size_t hits = 0;
  size_t depth = std::min<size_t>(k, ranked.entries.size());
  for (size_t i = 0; i < depth; ++i)
    if (qrels.grade(ranked.query_id, ranked.entries[i].doc_id) >= min_rel) ++hits;
  return double(hits) / double(denom);
}

double rbo_ext(std::span<const std::string> s, std::span<const std::string> t, double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::Config, "rbo persistence must be in (0,1)");
  if (s.empty() || t.empty())
    throw Error(ErrorCode::Input, "rbo is undefined for an empty ranking");

  size_t d = std::min(s.size(), t.size());
  std::unordered_set<std::string_view> seen_s, seen_t;
  size_t overlap = 0;
  double weighted = 0.0;  // sum_i p^(i-1) A_i
  double pw = 1.0;
  bool all_agree = true;
  for (size_t i = 1; i <= d; ++i) {
    std::string_view a = s[i - 1], b = t[i - 1];
    if (a == b) {
      ++overlap;
    } else {
      if (seen_t.count(a)) ++overlap;
      if (seen_s.count(b)) ++overlap;
    }
    seen_s.insert(a);
    seen_t.insert(b);
    if (overlap != i) all_agree = false;
    weighted += pw * (double(overlap) / double(i));
    pw *= p;
  }
  if (all_agree) return 1.0;  // geometric series closes exactly
  double a_d = double(overlap) / double(d);
  return (1.0 - p) * weighted + a_d * pw;
}

double rbo_ext(const RankedList& s, const RankedList& t, double p) {
  std::vector<std::string> ds, dt;
  ds.reserve(s.entries.size());
  dt.reserve(t.entries.size());
  for (const auto& e : s.entries) ds.push_back(e.doc_id);
  for (const auto& e : t.entries) dt.push_back(e.doc_id);
  return rbo_ext(ds, dt, p);
}

Qrels read_qrels(const std::string& path, std::vector<std::string>* warnings) {
  Qrels qrels;
  for_each_line(path, [&](size_t line_no, std::string_view line) {
    std::vector<std::string> f = split_ws(line);
    if (f.size() != 4)
      throw Error(ErrorCode::Format,
                  path + ":" + std::to_string(line_no) + ": expected 4 fields, got " +
                      std::to_string(f.size()));
    long grade = parse_int(f[3], path, line_no);
    if (grade < 0)
      throw Error(ErrorCode::Format,
                  path + ":" + std::to_string(line_no) + ": negative relevance grade");
    auto& per_query = qrels.grades[f[0]];
    auto [it, inserted] = per_query.emplace(f[2], int(grade));
    if (!inserted) {
      it->second = int(grade);  // last wins
      if (warnings)
        warnings->push_back("duplicate qrels entry (" + f[0] + ", " + f[2] + ") at " + path +
                            ":" + std::to_string(line_no) + "; keeping the last grade");
    }
  });
  return qrels;
}

Run read_run(const std::string& path) {
  Run run;
  run.tag.clear();
  std::unordered_map<std::string, size_t> list_of;
  std::vector<std::unordered_set<std::string>> seen_docs;
  for_each_line(path, [&](size_t line_no, std::string_view line) {
    std::vector<std::string> f = split_ws(line);
    if (f.size() != 6)
      throw Error(ErrorCode::Format,
                  path + ":" + std::to_string(line_no) + ": expected 6 fields, got " +
                      std::to_string(f.size()));
    const std::string& qid = f[0];
    long rank = parse_int(f[3], path, line_no);
    double score = parse_double(f[4], path, line_no);
    auto [it, inserted] = list_of.emplace(qid, run.lists.size());
    if (inserted) {
      run.lists.push_back({qid, {}});
      seen_docs.emplace_back();
    }
    RankedList& list = run.lists[it->second];
    if (rank != long(list.entries.size()) + 1)
      throw Error(ErrorCode::Format, path + ":" + std::to_string(line_no) +
                                         ": ranks must be contiguous from 1");
    if (!seen_docs[it->second].insert(f[2]).second)
      throw Error(ErrorCode::Format, path + ":" + std::to_string(line_no) +
                                         ": duplicate doc_id within a query");
    list.entries.push_back({f[2], score});
    run.tag = f[5];
  });
  if (run.tag.empty()) run.tag = "latte";
  return run;
}

std::string format_run(const Run& run) {
  std::string out;
  char buf[512];
  for (const RankedList& list : run.lists) {
    for (size_t i = 0; i < list.entries.size(); ++i) {
      int n = std::snprintf(buf, sizeof(buf), "%s Q0 %s %zu %.6f %s\n", list.query_id.c_str(),
                            list.entries[i].doc_id.c_str(), i + 1, list.entries[i].score,
                            run.tag.c_str());
      if (n < 0 || size_t(n) >= sizeof(buf))
        throw Error(ErrorCode::Internal, "run line too long");
      out.append(buf, size_t(n));
    }
  }
  return out;
}

void write_run(const Run& run, const std::string& path) { write_file(path, format_run(run)); }

MeasureSpec MeasureSpec::parse(std::string_view spec) {
  MeasureSpec m;
  m.label = std::string(spec);
  std::string s(spec);
  for (auto& ch : s) ch = char(std::tolower(static_cast<unsigned char>(ch)));

  size_t at = s.find('@');
  if (at == std::string::npos)
    throw Error(ErrorCode::Config, "measure spec needs a depth: " + m.label);
  std::string name = s.substr(0, at);
  std::string rest = s.substr(at + 1);

  int min_rel = 1;
  size_t colon = rest.find(':');
  if (colon != std::string::npos) {
    try {
      min_rel = std::stoi(rest.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::Config, "bad min_rel in measure spec: " + m.label);
    }
    rest = rest.substr(0, colon);
  }

  uint64_t mult = 1;
  if (!rest.empty() && rest.back() == 'k') {
    mult = 1000;
    rest.pop_back();
  }
  uint64_t depth = 0;
  try {
    depth = std::stoull(rest) * mult;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Config, "bad depth in measure spec: " + m.label);
  }
  if (depth == 0 || depth > 1u << 30)
    throw Error(ErrorCode::Config, "measure depth out of range: " + m.label);
  m.depth = uint32_t(depth);
  m.min_rel = min_rel;

  if (name == "rr") {
    m.kind = Kind::RR;
  } else if (name == "ndcg") {
    m.kind = Kind::NDCG;
    if (colon != std::string::npos)
      throw Error(ErrorCode::Config, "ndcg does not take a min_rel: " + m.label);
  } else if (name == "r" || name == "recall") {
    m.kind = Kind::Recall;
  } else {
    throw Error(ErrorCode::Config, "unknown measure: " + m.label);
  }
  return m;
}

void EvalReport::add_column(const std::string& label, std::vector<double> per_query) {
  if (per_query.size() != query_ids.size())
    throw Error(ErrorCode::Internal, "report column length mismatch");
  columns.push_back(label);
  double sum = 0.0;
  size_t n = 0;
  for (size_t i = 0; i < per_query.size(); ++i) {
    if (!std::isnan(per_query[i])) {
      sum += per_query[i];
      ++n;
    }
    values[i].push_back(per_query[i]);
  }
  means.push_back(n == 0 ? 0.0 : sum / double(n));
  evaluated.push_back(n);
}

double EvalReport::mean_of(const std::string& label) const {
  for (size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == label) return means[i];
  throw Error(ErrorCode::Internal, "no such report column: " + label);
}

EvalReport evaluate_run(const Run& run, const Qrels& qrels,
                        std::span<const MeasureSpec> measures) {
  EvalReport report;
  report.query_ids.reserve(run.lists.size());
  for (const auto& list : run.lists) {
    report.query_ids.push_back(list.query_id);
    if (!qrels.has_query(list.query_id)) ++report.unjudged_queries;
  }
  report.values.assign(run.lists.size(), {});

  for (const MeasureSpec& m : measures) {
    std::vector<double> col;
    col.reserve(run.lists.size());
    for (const auto& list : run.lists) {
      switch (m.kind) {
        case MeasureSpec::Kind::RR:
          col.push_back(rr_at_k(list, qrels, m.depth, m.min_rel));
          break;
        case MeasureSpec::Kind::NDCG:
          col.push_back(ndcg_at_k(list, qrels, m.depth));
          break;
        case MeasureSpec::Kind::Recall: {
          auto r = recall_at_k(list, qrels, m.depth, m.min_rel);
          col.push_back(r ? *r : kNaN);
          break;
        }
      }
    }
    report.add_column(m.label, std::move(col));
  }
  return report;
}

std::string report_jsonl(const EvalReport& report, const std::string& tag) {
  using nlohmann::json;
  std::string out;
  {
    json meta;
    meta["meta"] = {
        {"tag", tag},
        {"measures", report.columns},
        {"unjudged_queries", report.unjudged_queries},
        {"policies",
         {{"rbo", "extrapolated; both rankings truncated to the shorter length"},
          {"ndcg_gain", "linear"},
          {"unjudged", "rr/ndcg score 0; recall skips the query"}}},
    };
    out += meta.dump();
    out += '\n';
  }
  for (size_t i = 0; i < report.query_ids.size(); ++i) {
    json obj;
    obj["query_id"] = report.query_ids[i];
    for (size_t c = 0; c < report.columns.size(); ++c) {
      if (std::isnan(report.values[i][c]))
        obj[report.columns[c]] = nullptr;
      else
        obj[report.columns[c]] = report.values[i][c];
    }
    out += obj.dump();
    out += '\n';
  }
  {
    json obj;
    obj["query_id"] = nullptr;
    json mean, evaluated;
    for (size_t c = 0; c < report.columns.size(); ++c) {
      mean[report.columns[c]] = report.means[c];
      evaluated[report.columns[c]] = report.evaluated[c];
    }
    obj["mean"] = mean;
    obj["evaluated"] = evaluated;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

}  // namespace latte
