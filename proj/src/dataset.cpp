#include "dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "log.hpp"
#include "rng.hpp"

namespace cdln {

std::vector<PromptSpec> default_prompt_specs() {
    return {
        {1, 2, 12, 1783, 350}, {2, 1, 6, 1800, 350},  {3, 0, 3, 1726, 150},
        {4, 0, 3, 1772, 150},  {5, 0, 4, 1805, 150},  {6, 0, 4, 1800, 150},
        {7, 0, 30, 1569, 250}, {8, 0, 60, 723, 650},
    };
}

std::vector<PromptSpec> parse_prompt_ranges(const std::string& spec_text) {
    std::vector<PromptSpec> specs;
    std::stringstream ss(spec_text);
    std::string item;
    int prompt = 1;
    while (std::getline(ss, item, ',')) {
        auto colon = item.find(':');
        if (colon == std::string::npos)
            fail(errc::config, "prompt_ranges: expected min:max, got '" + item + "'");
        PromptSpec spec;
        spec.prompt_id = prompt++;
        try {
            spec.score_min = std::stoi(item.substr(0, colon));
            spec.score_max = std::stoi(item.substr(colon + 1));
        } catch (const std::exception&) {
            fail(errc::config, "prompt_ranges: non-numeric bound in '" + item + "'");
        }
        if (spec.score_max <= spec.score_min)
            fail(errc::config, "prompt_ranges: max must exceed min in '" + item + "'");
        specs.push_back(spec);
    }
    if (specs.empty()) fail(errc::config, "prompt_ranges: empty");
    return specs;
}

const PromptSpec& prompt_spec_for(const std::vector<PromptSpec>& specs, int prompt_id) {
    for (const PromptSpec& s : specs)
        if (s.prompt_id == prompt_id) return s;
    fail(errc::data, "no prompt spec for prompt " + std::to_string(prompt_id));
}

int resolve_score(int rater1, int rater2, const PromptSpec& spec, bool* clamped) {
    if (rater1 < 0 || rater2 < 0)
        fail(errc::data, "negative rater score (" + std::to_string(rater1) + ", " +
                             std::to_string(rater2) + ")");
    int total = rater1 + rater2;
    int out = std::clamp(total, spec.score_min, spec.score_max);
    if (out != total) {
        if (clamped) *clamped = true;
        log_warn("rater sum " + std::to_string(total) + " clamped to [" +
                     std::to_string(spec.score_min) + "," + std::to_string(spec.score_max) +
                     "] for prompt " + std::to_string(spec.prompt_id),
                 "resolve_score_clamp");
    }
    return out;
}

double normalize_score(int raw, const PromptSpec& spec) {
    if (raw < spec.score_min || raw > spec.score_max)
        fail(errc::data, "raw score " + std::to_string(raw) + " outside [" +
                             std::to_string(spec.score_min) + "," + std::to_string(spec.score_max) +
                             "] for prompt " + std::to_string(spec.prompt_id));
    return static_cast<double>(raw - spec.score_min) /
           static_cast<double>(spec.score_max - spec.score_min);
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

std::optional<int> parse_int(const std::string& s) {
    if (s.empty()) return std::nullopt;
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

}  // namespace

std::vector<Essay> load_asap_tsv(const std::string& path, const std::vector<PromptSpec>& specs,
                                 LoadStats* stats) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(errc::io, "cannot open dataset file: " + path);

    LoadStats local;
    LoadStats& st = stats ? *stats : local;
    st = LoadStats{};

    std::string line;
    if (!std::getline(in, line)) fail(errc::format, path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    // tolerate a UTF-8 BOM on the header
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

    std::vector<std::string> header = split_tabs(line);
    auto column = [&](const char* name) -> std::size_t {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            fail(errc::format, path + ": missing required column '" + std::string(name) + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t col_id = column("essay_id");
    const std::size_t col_set = column("essay_set");
    const std::size_t col_text = column("essay");
    const std::size_t col_r1 = column("rater1_domain1");
    const std::size_t col_r2 = column("rater2_domain1");

    std::vector<Essay> essays;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++st.rows_read;
        std::vector<std::string> fields = split_tabs(line);
        if (fields.size() > header.size())
            fail(errc::format, path + ":" + std::to_string(line_no) +
                                   ": row has more fields than the header (embedded tab?)");
        fields.resize(header.size());

        auto id = parse_int(fields[col_id]);
        auto set = parse_int(fields[col_set]);
        if (!id || !set)
            fail(errc::format,
                 path + ":" + std::to_string(line_no) + ": non-numeric essay_id/essay_set");

        auto r1 = parse_int(fields[col_r1]);
        auto r2 = parse_int(fields[col_r2]);
        if (!r1 || !r2) {
            ++st.skipped_missing_scores;
            continue;
        }

        const PromptSpec* spec = nullptr;
        for (const PromptSpec& s : specs)
            if (s.prompt_id == *set) spec = &s;
        if (!spec) {
            ++st.skipped_unknown_prompt;
            log_warn(path + ":" + std::to_string(line_no) + ": no spec for prompt " +
                         std::to_string(*set) + ", row skipped",
                     "load_unknown_prompt");
            continue;
        }

        Essay e;
        e.essay_id = *id;
        e.prompt_id = *set;
        e.text = fields[col_text];
        e.rater1 = *r1;
        e.rater2 = *r2;
        bool clamped = false;
        e.raw_score = resolve_score(*r1, *r2, *spec, &clamped);
        if (clamped) ++st.clamped_scores;
        e.normalized_score = normalize_score(e.raw_score, *spec);
        essays.push_back(std::move(e));
    }
    st.essays_loaded = essays.size();
    if (st.skipped_missing_scores > 0)
        log_info(path + ": skipped " + std::to_string(st.skipped_missing_scores) +
                 " rows with missing rater scores");
    return essays;
}

DatasetSplit split_train_test(const std::vector<Essay>& essays, double ratio, std::uint64_t seed) {
    if (essays.empty()) fail(errc::data, "split: empty essay set");
    if (!(ratio > 0.0 && ratio < 1.0))
        fail(errc::contract, "split: ratio must lie strictly between 0 and 1");

    std::map<int, std::vector<const Essay*>> by_prompt;
    for (const Essay& e : essays) by_prompt[e.prompt_id].push_back(&e);

    DatasetSplit out;
    for (auto& [prompt, group] : by_prompt) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(prompt) * 2 + 1));
        rng.shuffle(group);
        std::size_t n_train =
            static_cast<std::size_t>(std::floor(ratio * static_cast<double>(group.size()) + 0.5));
        n_train = std::min(n_train, group.size());
        for (std::size_t i = 0; i < group.size(); ++i)
            (i < n_train ? out.train : out.test).push_back(*group[i]);
    }
    return out;
}

std::map<int, int> kfold_split(const std::vector<Essay>& essays, int k, std::uint64_t seed) {
    if (k < 2) fail(errc::contract, "kfold: k must be >= 2");
    if (static_cast<std::size_t>(k) > essays.size())
        fail(errc::data, "kfold: k = " + std::to_string(k) + " exceeds essay count " +
                             std::to_string(essays.size()));
    std::vector<int> ids;
    ids.reserve(essays.size());
    for (const Essay& e : essays) ids.push_back(e.essay_id);
    Rng rng(derive_seed(seed, "kfold"));
    rng.shuffle(ids);
    std::map<int, int> folds;
    for (std::size_t i = 0; i < ids.size(); ++i)
        folds[ids[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    return folds;
}

}  // namespace cdln
