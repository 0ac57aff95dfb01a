#include "uci/eval.hpp"

#include "uci/common.hpp"
#include "uci/model.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace uci {

using nlohmann::json;

double video_score(std::span<const double> clip_probs) {
    if (clip_probs.empty())
        throw ConfigError("video_score: no clip predictions to average");
    double acc = 0.0;
    for (double p : clip_probs)
        acc += p;
    return acc / static_cast<double>(clip_probs.size());
}

double auc(std::span<const VideoScore> scores) {
    const size_t n = scores.size();
    size_t n_fake = 0;
    for (const VideoScore& s : scores)
        n_fake += s.label == 1 ? 1u : 0u;
    const size_t n_real = n - n_fake;
    if (n_fake == 0 || n_real == 0)
        throw ConfigError("auc: both classes must be present");

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a].score < scores[b].score; });

    // twice the midrank keeps everything integral; ties share a rank block
    std::vector<double> rank2(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && scores[order[j + 1]].score == scores[order[i]].score)
            ++j;
        const double r2 = static_cast<double>(i + j) + 2.0; // 2 * mean of ranks (1-based)
        for (size_t k = i; k <= j; ++k)
            rank2[order[k]] = r2;
        i = j + 1;
    }

    double u2 = 0.0; // 2 * (wins + 0.5 * ties) summed over fake samples
    for (size_t k = 0; k < n; ++k)
        if (scores[k].label == 1)
            u2 += rank2[k];
    u2 -= static_cast<double>(n_fake) * (static_cast<double>(n_fake) + 1.0);
    return u2 / (2.0 * static_cast<double>(n_fake) * static_cast<double>(n_real));
}

double auc_pairwise(std::span<const VideoScore> scores) {
    double wins = 0.0;
    size_t n_fake = 0, n_real = 0;
    for (const VideoScore& f : scores) {
        if (f.label != 1)
            continue;
        ++n_fake;
        for (const VideoScore& r : scores) {
            if (r.label != 0)
                continue;
            if (f.score > r.score)
                wins += 1.0;
            else if (f.score == r.score)
                wins += 0.5;
        }
    }
    for (const VideoScore& s : scores)
        n_real += s.label == 0 ? 1u : 0u;
    if (n_fake == 0 || n_real == 0)
        throw ConfigError("auc: both classes must be present");
    // same dyadic arithmetic as the rank path: 2x/2y divides identically
    return (2.0 * wins) / (2.0 * static_cast<double>(n_fake) * static_cast<double>(n_real));
}

double acc(std::span<const VideoScore> scores, double threshold) {
    if (scores.empty())
        throw ConfigError("acc: empty score list");
    size_t correct = 0;
    for (const VideoScore& s : scores) {
        const int predicted = s.score >= threshold ? 1 : 0;
        correct += predicted == s.label ? 1u : 0u;
    }
    return static_cast<double>(correct) / static_cast<double>(scores.size());
}

DomainReport cross_domain_report(Model& model, std::span<const ClipRecord> records,
                                 const std::string& held_out_domain, int clip_len) {
    bool domain_known = false;
    for (const ClipRecord& r : records)
        if (r.domain == held_out_domain)
            domain_known = true;
    if (!domain_known)
        throw ConfigError("cross_domain_report: domain '" + held_out_domain +
                          "' does not appear in the manifest");

    DomainReport report;
    report.held_out = held_out_domain;
    for (const ClipRecord& r : records) {
        if (r.domain != held_out_domain || r.split != Split::test)
            continue;
        VideoScore vs;
        vs.video_id = r.video_id;
        vs.label = r.label;
        vs.domain = r.domain;
        vs.score = model.score_record(r, clip_len);
        report.scores.push_back(std::move(vs));
    }
    if (report.scores.empty())
        throw ConfigError("cross_domain_report: no test videos for domain '" + held_out_domain + "'");

    DomainReportRow row;
    row.domain = held_out_domain;
    row.n_videos = static_cast<int>(report.scores.size());
    row.auc = auc(report.scores);
    row.acc = acc(report.scores);
    report.rows.push_back(std::move(row));
    return report;
}

void write_report_tsv(const DomainReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("report: cannot write " + path.string());
    out << "domain\tn_videos\tauc\tacc\n";
    char buf[128];
    for (const DomainReportRow& r : report.rows) {
        std::snprintf(buf, sizeof(buf), "%s\t%d\t%.17g\t%.17g\n", r.domain.c_str(), r.n_videos,
                      r.auc, r.acc);
        out << buf;
    }
}

void write_report_json(const DomainReport& report, const std::filesystem::path& path) {
    json j;
    j["held_out"] = report.held_out;
    json rows = json::array();
    for (const DomainReportRow& r : report.rows)
        rows.push_back({{"domain", r.domain}, {"n_videos", r.n_videos}, {"auc", r.auc}, {"acc", r.acc}});
    j["rows"] = rows;
    json scores = json::array();
    for (const VideoScore& s : report.scores)
        scores.push_back({{"video_id", s.video_id}, {"score", s.score}, {"label", s.label}, {"domain", s.domain}});
    j["scores"] = scores;
    std::ofstream out(path);
    if (!out)
        throw IoError("report: cannot write " + path.string());
    out << j.dump(2) << '\n';
}

DomainReport read_report_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("report: cannot open " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded())
        throw IoError("report: malformed json in " + path.string());
    DomainReport report;
    report.held_out = j.at("held_out").get<std::string>();
    for (const auto& r : j.at("rows")) {
        DomainReportRow row;
        row.domain = r.at("domain").get<std::string>();
        row.n_videos = r.at("n_videos").get<int>();
        row.auc = r.at("auc").get<double>();
        row.acc = r.at("acc").get<double>();
        report.rows.push_back(std::move(row));
    }
    if (j.contains("scores")) {
        for (const auto& s : j.at("scores")) {
            VideoScore vs;
            vs.video_id = s.at("video_id").get<std::string>();
            vs.score = s.at("score").get<double>();
            vs.label = s.at("label").get<int>();
            vs.domain = s.at("domain").get<std::string>();
            report.scores.push_back(std::move(vs));
        }
    }
    return report;
}

} // namespace uci
