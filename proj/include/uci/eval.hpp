#pragma once

#include "uci/clips.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace uci {

struct Model;

/// Per-video result; fake (label 1) is the positive class.
struct VideoScore {
    std::string video_id;
    double score = 0.0; // mean clip probability
    int label = 0;
    std::string domain;
};

/// Arithmetic mean of clip probabilities; throws on an empty list.
double video_score(std::span<const double> clip_probs);

/// Mann-Whitney AUC via midranks: the fraction of (fake, real) pairs with
/// fake score above real, ties counting one half. Throws when only one
/// class is present.
double auc(std::span<const VideoScore> scores);

/// O(n^2) pairwise-count reference for auc(); kept as the independent route
/// the implementation is checked against.
double auc_pairwise(std::span<const VideoScore> scores);

/// Fraction classified correctly with score >= threshold meaning fake.
double acc(std::span<const VideoScore> scores, double threshold = 0.5);

struct DomainReportRow {
    std::string domain;
    int n_videos = 0;
    double auc = 0.0;
    double acc = 0.0;
};

struct DomainReport {
    std::string held_out;
    std::vector<DomainReportRow> rows;
    std::vector<VideoScore> scores;
};

/// Leave-one-domain-out protocol: scores only the held-out domain's test
/// videos and reports its AUC/ACC. Throws ConfigError when the domain does
/// not appear in the records.
DomainReport cross_domain_report(Model& model, std::span<const ClipRecord> records,
                                 const std::string& held_out_domain, int clip_len);

void write_report_tsv(const DomainReport& report, const std::filesystem::path& path);
void write_report_json(const DomainReport& report, const std::filesystem::path& path);
DomainReport read_report_json(const std::filesystem::path& path);

} // namespace uci
