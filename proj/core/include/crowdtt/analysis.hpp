#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace crowdtt::analysis {

inline constexpr int kChoices = 6;
inline constexpr const char* kUngrouped = "ungrouped";

struct AnswerSheet {
    std::string participant_id;
    std::string group;  // empty means ungrouped
    std::optional<double> age;
    std::optional<std::string> gender;
    std::string choices;  // kChoices letters over {A, B}
};

struct RejectedSheet {
    std::size_t line = 0;
    std::string participant_id;
    std::string reason;
};

struct SheetFile {
    std::vector<AnswerSheet> sheets;
    std::vector<RejectedSheet> rejected;
};

// `participant_id,group,age,gender,c1,...,c6` with a header line. Rows that
// are incomplete or malformed are reported in `rejected`, not thrown; a
// missing or wrong header throws ParseError.
SheetFile read_answer_sheets(std::istream& in);
SheetFile load_answer_sheets(const std::string& path);
void write_answer_sheets(std::ostream& out, std::span<const AnswerSheet> sheets);

// Free-text comments, `participant_id,text`; text may be double-quoted.
std::map<std::string, std::string> read_comments(std::istream& in);

// Throws InvalidArgument unless `key` is kChoices letters over {A, B}.
void validate_key(const std::string& key);

// Positions where the choice matches the key.
int score(const AnswerSheet& sheet, const std::string& key);
int score(const std::string& choices, const std::string& key);
std::string complement(const std::string& choices);

struct ScoreDistribution {
    std::size_t n = 0;
    std::array<std::size_t, kChoices + 1> counts{};
    double mean = 0.0;
    std::size_t partitioned = 0;  // participants at score 0 or 6
    double partition_fraction = 0.0;

    double share(int k) const { return static_cast<double>(counts[static_cast<std::size_t>(k)]) / static_cast<double>(n); }
};

// Throws InvalidArgument when `sheets` is empty.
ScoreDistribution distribution(std::span<const AnswerSheet> sheets, const std::string& key);

// Expected counts under random guessing, kept as exact fractions over 64.
struct BinomialExpectation {
    std::size_t n = 0;
    std::array<std::uint64_t, kChoices + 1> numerators{};  // n * C(6, k)
    static constexpr std::uint64_t denominator = 64;

    double count(int k) const;
    std::array<double, kChoices + 1> counts() const;
    double partition_count() const { return count(0) + count(kChoices); }
};

BinomialExpectation binomial_expected(std::size_t n);

struct GoodnessOfFit {
    double statistic = 0.0;
    int df = 0;
    double p_value = 1.0;
    std::vector<double> observed;  // after merging zero-expectation bins
    std::vector<double> expected;
};

// Pearson chi-square, df = bins - 1. Bins with zero expectation are merged
// into their left neighbour (right neighbour for the first bin).
GoodnessOfFit goodness_of_fit(std::span<const double> observed, std::span<const double> expected);
// Critical statistic for significance level alpha.
double chi_square_critical(int df, double alpha);

// P(at least `observed` of n random guessers score 0 or 6), computed with
// exact integer binomial coefficients.
double partition_tail_probability(std::size_t n, std::size_t observed);

// Fraction correct on each pair, in pair order.
std::vector<double> per_pair_success(std::span<const AnswerSheet> sheets, const std::string& key);

struct GroupStats {
    std::string group;
    std::size_t n = 0;
    double mean = 0.0;
    std::array<std::size_t, kChoices + 1> counts{};
};

// Groups ordered numerically when ids are integers, then lexically, with
// the ungrouped bucket last. Empty ids, and ids outside `known` when it is
// given, fall into the ungrouped bucket.
std::vector<GroupStats> per_group(std::span<const AnswerSheet> sheets, const std::string& key,
                                  const std::optional<std::set<std::string>>& known = std::nullopt);

struct Demographics {
    std::size_t ages_reported = 0;
    double age_mean = 0.0;
    double age_sd = 0.0;
    std::vector<std::pair<std::string, double>> excluded_ages;  // participant, age
    std::size_t genders_reported = 0;
    std::map<std::string, std::size_t> gender_counts;  // male, female, other
    std::vector<std::string> notes;
};

// Ages further than `sigma_limit` standard deviations from the mean are
// excluded once, with a note. Genders normalise to male/female/other.
Demographics demographics(std::span<const AnswerSheet> sheets, double sigma_limit = 3.0);

struct Report {
    std::string key;
    ScoreDistribution scores;
    BinomialExpectation expected;
    GoodnessOfFit fit;
    double partition_tail = 1.0;
    std::vector<double> pair_success;
    std::vector<GroupStats> groups;
    Demographics demographics;
    std::vector<RejectedSheet> rejected;
    std::size_t comments = 0;
};

Report analyse(const SheetFile& file, const std::string& key);

// Plain-text summary followed by delimited tables.
void write_report(std::ostream& out, const Report& report,
                  const std::vector<std::pair<std::string, std::string>>& stamps = {});

}  // namespace crowdtt::analysis
