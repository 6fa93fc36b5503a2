#include "crowdtt/analysis.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "crowdtt/error.hpp"
#include "crowdtt/text_io.hpp"

namespace crowdtt::analysis {

namespace {

constexpr std::array<const char*, 10> kColumns = {"participant_id", "group", "age", "gender", "c1",
                                                  "c2",             "c3",    "c4",  "c5",     "c6"};

constexpr std::array<std::uint64_t, kChoices + 1> kPascal6 = {1, 6, 15, 20, 15, 6, 1};

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::optional<std::string> parse_row(std::string_view body, AnswerSheet& sheet) {
    const auto fields = text::split(body, ',');
    if (fields.size() != kColumns.size())
        return "expected " + std::to_string(kColumns.size()) + " fields, found " + std::to_string(fields.size());
    sheet.participant_id = std::string(text::trim(fields[0]));
    if (sheet.participant_id.empty()) return "empty participant id";
    sheet.group = std::string(text::trim(fields[1]));
    if (const auto age = text::trim(fields[2]); !age.empty()) {
        double v = 0.0;
        if (!text::parse_double(age, v) || v <= 0.0) return "invalid age `" + std::string(age) + "`";
        sheet.age = v;
    }
    if (const auto g = text::trim(fields[3]); !g.empty()) sheet.gender = std::string(g);
    for (int k = 0; k < kChoices; ++k) {
        const auto c = text::trim(fields[static_cast<std::size_t>(4 + k)]);
        if (c.empty()) return "incomplete: no choice for pair " + std::to_string(k + 1);
        if (c.size() != 1 || (std::toupper(static_cast<unsigned char>(c[0])) != 'A' &&
                              std::toupper(static_cast<unsigned char>(c[0])) != 'B'))
            return "invalid choice `" + std::string(c) + "` for pair " + std::to_string(k + 1);
        sheet.choices.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c[0]))));
    }
    return std::nullopt;
}

}  // namespace

SheetFile read_answer_sheets(std::istream& in) {
    SheetFile file;
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = text::trim(line);
        if (body.empty() || body.front() == '#') continue;
        if (!header) {
            const auto cols = text::split(body, ',');
            bool ok = cols.size() == kColumns.size();
            for (std::size_t i = 0; ok && i < cols.size(); ++i) ok = text::trim(cols[i]) == kColumns[i];
            if (!ok) throw ParseError(lineno, "expected header `participant_id,group,age,gender,c1,...,c6`");
            header = true;
            continue;
        }
        AnswerSheet sheet;
        auto reason = parse_row(body, sheet);
        if (!reason && !seen.insert(sheet.participant_id).second) reason = "duplicate participant id";
        if (reason)
            file.rejected.push_back({lineno, sheet.participant_id, *reason});
        else
            file.sheets.push_back(std::move(sheet));
    }
    if (!header) throw ParseError(lineno, "answer sheet file has no header");
    return file;
}

SheetFile load_answer_sheets(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    return read_answer_sheets(in);
}

void write_answer_sheets(std::ostream& out, std::span<const AnswerSheet> sheets) {
    out << "participant_id,group,age,gender,c1,c2,c3,c4,c5,c6\n";
    for (const auto& s : sheets) {
        out << s.participant_id << ',' << s.group << ',' << (s.age ? text::format_double(*s.age) : "") << ','
            << s.gender.value_or("");
        for (char c : s.choices) out << ',' << c;
        out << '\n';
    }
}

std::map<std::string, std::string> read_comments(std::istream& in) {
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = text::trim(line);
        if (body.empty()) continue;
        if (!header) {
            if (body != "participant_id,text") throw ParseError(lineno, "expected header `participant_id,text`");
            header = true;
            continue;
        }
        const auto comma = body.find(',');
        if (comma == std::string_view::npos) throw ParseError(lineno, "expected `participant_id,text`");
        std::string id(text::trim(body.substr(0, comma)));
        auto raw = text::trim(body.substr(comma + 1));
        std::string textv;
        if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') {
            raw = raw.substr(1, raw.size() - 2);
            for (std::size_t i = 0; i < raw.size(); ++i) {
                textv.push_back(raw[i]);
                if (raw[i] == '"' && i + 1 < raw.size() && raw[i + 1] == '"') ++i;
            }
        } else {
            textv = std::string(raw);
        }
        out[id] = std::move(textv);
    }
    return out;
}

void validate_key(const std::string& key) {
    if (key.size() != static_cast<std::size_t>(kChoices) ||
        !std::all_of(key.begin(), key.end(), [](char c) { return c == 'A' || c == 'B'; }))
        throw InvalidArgument("answer key must be " + std::to_string(kChoices) + " letters over {A,B}, got `" + key +
                              "`");
}

int score(const std::string& choices, const std::string& key) {
    validate_key(key);
    if (choices.size() != key.size() ||
        !std::all_of(choices.begin(), choices.end(), [](char c) { return c == 'A' || c == 'B'; }))
        throw InvalidArgument("malformed choices `" + choices + "`");
    int s = 0;
    for (std::size_t i = 0; i < key.size(); ++i) s += choices[i] == key[i];
    return s;
}

int score(const AnswerSheet& sheet, const std::string& key) { return score(sheet.choices, key); }

std::string complement(const std::string& choices) {
    std::string out = choices;
    for (char& c : out) c = c == 'A' ? 'B' : 'A';
    return out;
}

ScoreDistribution distribution(std::span<const AnswerSheet> sheets, const std::string& key) {
    if (sheets.empty()) throw InvalidArgument("no valid answer sheets to score");
    ScoreDistribution d;
    d.n = sheets.size();
    std::size_t total = 0;
    for (const auto& s : sheets) {
        const int k = score(s, key);
        ++d.counts[static_cast<std::size_t>(k)];
        total += static_cast<std::size_t>(k);
    }
    d.mean = static_cast<double>(total) / static_cast<double>(d.n);
    d.partitioned = d.counts[0] + d.counts[kChoices];
    d.partition_fraction = static_cast<double>(d.partitioned) / static_cast<double>(d.n);
    return d;
}

double BinomialExpectation::count(int k) const {
    return static_cast<double>(numerators[static_cast<std::size_t>(k)]) / static_cast<double>(denominator);
}

std::array<double, kChoices + 1> BinomialExpectation::counts() const {
    std::array<double, kChoices + 1> out{};
    for (int k = 0; k <= kChoices; ++k) out[static_cast<std::size_t>(k)] = count(k);
    return out;
}

BinomialExpectation binomial_expected(std::size_t n) {
    if (n == 0) throw InvalidArgument("binomial expectation needs at least one participant");
    BinomialExpectation e;
    e.n = n;
    for (std::size_t k = 0; k < kPascal6.size(); ++k) e.numerators[k] = n * kPascal6[k];
    return e;
}

GoodnessOfFit goodness_of_fit(std::span<const double> observed, std::span<const double> expected) {
    if (observed.size() != expected.size() || observed.empty())
        throw InvalidArgument("observed and expected must cover the same non-empty support");
    GoodnessOfFit g;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (expected[i] < 0.0 || observed[i] < 0.0) throw InvalidArgument("counts must be non-negative");
        g.observed.push_back(observed[i]);
        g.expected.push_back(expected[i]);
    }
    // Fold each zero-expectation bin into a neighbour until none remain.
    for (std::size_t i = 0; i < g.expected.size() && g.expected.size() > 1;) {
        if (g.expected[i] > 0.0) {
            ++i;
            continue;
        }
        const std::size_t into = i == 0 ? 1 : i - 1;
        g.observed[into] += g.observed[i];
        g.expected[into] += g.expected[i];
        g.observed.erase(g.observed.begin() + static_cast<std::ptrdiff_t>(i));
        g.expected.erase(g.expected.begin() + static_cast<std::ptrdiff_t>(i));
        if (i > 0) --i;
    }
    if (g.expected.size() < 2 || g.expected.front() <= 0.0)
        throw InvalidArgument("goodness of fit needs at least two bins with positive expectation");
    for (std::size_t i = 0; i < g.expected.size(); ++i) {
        const double diff = g.observed[i] - g.expected[i];
        g.statistic += diff * diff / g.expected[i];
    }
    g.df = static_cast<int>(g.expected.size()) - 1;
    const boost::math::chi_squared dist(g.df);
    g.p_value = boost::math::cdf(boost::math::complement(dist, g.statistic));
    return g;
}

double chi_square_critical(int df, double alpha) {
    if (df < 1 || !(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("need df >= 1 and alpha in (0, 1)");
    return boost::math::quantile(boost::math::complement(boost::math::chi_squared(df), alpha));
}

double partition_tail_probability(std::size_t n, std::size_t observed) {
    using boost::multiprecision::cpp_int;
    using boost::multiprecision::cpp_rational;
    if (observed > n) return 0.0;
    // Each guesser lands on {0, 6} with probability 2/64 = 1/32.
    cpp_int binom = 1;  // C(n, k)
    cpp_int numerator = 0;
    for (std::size_t k = 0; k <= n; ++k) {
        if (k > 0) binom = binom * (n - k + 1) / k;
        if (k >= observed) numerator += binom * boost::multiprecision::pow(cpp_int(31), static_cast<unsigned>(n - k));
    }
    const cpp_int denominator = boost::multiprecision::pow(cpp_int(32), static_cast<unsigned>(n));
    return cpp_rational(numerator, denominator).convert_to<double>();
}

std::vector<double> per_pair_success(std::span<const AnswerSheet> sheets, const std::string& key) {
    validate_key(key);
    std::vector<double> rates(key.size(), 0.0);
    if (sheets.empty()) return rates;
    for (const auto& s : sheets) {
        score(s, key);  // validates the sheet
        for (std::size_t i = 0; i < key.size(); ++i) rates[i] += s.choices[i] == key[i];
    }
    for (double& r : rates) r /= static_cast<double>(sheets.size());
    return rates;
}

std::vector<GroupStats> per_group(std::span<const AnswerSheet> sheets, const std::string& key,
                                  const std::optional<std::set<std::string>>& known) {
    std::map<std::string, GroupStats> by;
    for (const auto& s : sheets) {
        std::string g = s.group;
        if (g.empty() || (known && !known->count(g))) g = kUngrouped;
        GroupStats& st = by[g];
        st.group = g;
        const int k = score(s, key);
        ++st.n;
        ++st.counts[static_cast<std::size_t>(k)];
        st.mean += k;
    }
    std::vector<GroupStats> out;
    for (auto& [_, st] : by) {
        st.mean /= static_cast<double>(st.n);
        out.push_back(st);
    }
    auto rank = [](const std::string& g) {
        long long v = 0;
        if (g == kUngrouped) return std::make_tuple(2, 0LL, g);
        if (text::parse_int(g, v)) return std::make_tuple(0, v, std::string());
        return std::make_tuple(1, 0LL, g);
    };
    std::sort(out.begin(), out.end(),
              [&](const GroupStats& a, const GroupStats& b) { return rank(a.group) < rank(b.group); });
    return out;
}

Demographics demographics(std::span<const AnswerSheet> sheets, double sigma_limit) {
    Demographics d;
    std::vector<std::pair<std::string, double>> ages;
    for (const auto& s : sheets) {
        if (s.age) ages.emplace_back(s.participant_id, *s.age);
        if (s.gender) {
            const std::string g = lower(*s.gender);
            std::string cat = "other";
            if (g == "m" || g == "male" || g == "man") cat = "male";
            if (g == "f" || g == "female" || g == "woman") cat = "female";
            ++d.gender_counts[cat];
            ++d.genders_reported;
        }
    }
    auto moments = [](const std::vector<std::pair<std::string, double>>& v) {
        double sum = 0.0;
        for (const auto& a : v) sum += a.second;
        const double mean = sum / static_cast<double>(v.size());
        double ss = 0.0;
        for (const auto& a : v) ss += (a.second - mean) * (a.second - mean);
        const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
        return std::make_pair(mean, sd);
    };
    if (!ages.empty()) {
        const auto [mean, sd] = moments(ages);
        std::vector<std::pair<std::string, double>> kept;
        for (const auto& a : ages) {
            if (sd > 0.0 && std::abs(a.second - mean) > sigma_limit * sd) {
                d.excluded_ages.push_back(a);
                d.notes.push_back("excluded age " + text::format_double(a.second) + " of participant " + a.first +
                                  " (more than " + text::format_double(sigma_limit) + " sd from mean " +
                                  text::format_double(mean) + ")");
            } else {
                kept.push_back(a);
            }
        }
        d.ages_reported = kept.size();
        if (!kept.empty()) std::tie(d.age_mean, d.age_sd) = moments(kept);
    }
    return d;
}

Report analyse(const SheetFile& file, const std::string& key) {
    validate_key(key);
    Report r;
    r.key = key;
    r.scores = distribution(file.sheets, key);
    r.expected = binomial_expected(r.scores.n);
    std::array<double, kChoices + 1> observed{};
    for (std::size_t k = 0; k < observed.size(); ++k) observed[k] = static_cast<double>(r.scores.counts[k]);
    const auto expected = r.expected.counts();
    r.fit = goodness_of_fit(observed, expected);
    r.partition_tail = partition_tail_probability(r.scores.n, r.scores.partitioned);
    r.pair_success = per_pair_success(file.sheets, key);
    r.groups = per_group(file.sheets, key);
    r.demographics = demographics(file.sheets);
    r.rejected = file.rejected;
    return r;
}

void write_report(std::ostream& out, const Report& r,
                  const std::vector<std::pair<std::string, std::string>>& stamps) {
    using text::format_double;
    for (const auto& [k, v] : stamps) out << "# " << k << '=' << v << '\n';
    out << "key = " << r.key << '\n';
    out << "participants = " << r.scores.n << '\n';
    out << "rejected = " << r.rejected.size() << '\n';
    out << "mean_score = " << format_double(r.scores.mean) << '\n';
    out << "score0_share = " << format_double(r.scores.share(0)) << '\n';
    out << "score6_share = " << format_double(r.scores.share(kChoices)) << '\n';
    out << "partitioned = " << r.scores.partitioned << '\n';
    out << "partition_fraction = " << format_double(r.scores.partition_fraction) << '\n';
    out << "expected_partitioned = " << format_double(r.expected.partition_count()) << '\n';
    out << "partition_tail_probability = " << format_double(r.partition_tail) << '\n';
    out << "chi_square = " << format_double(r.fit.statistic) << '\n';
    out << "chi_square_df = " << r.fit.df << '\n';
    out << "chi_square_p = " << format_double(r.fit.p_value) << '\n';
    if (r.demographics.ages_reported > 0) {
        out << "ages_reported = " << r.demographics.ages_reported << '\n';
        out << "age_mean = " << format_double(r.demographics.age_mean) << '\n';
        out << "age_sd = " << format_double(r.demographics.age_sd) << '\n';
    }
    out << "genders_reported = " << r.demographics.genders_reported << '\n';
    for (const auto& [g, c] : r.demographics.gender_counts) out << "gender." << g << " = " << c << '\n';
    for (const auto& note : r.demographics.notes) out << "# note: " << note << '\n';
    for (const auto& rej : r.rejected)
        out << "# rejected line " << rej.line << " (" << rej.participant_id << "): " << rej.reason << '\n';

    out << "\n[scores]\nscore,observed,expected\n";
    for (int k = 0; k <= kChoices; ++k)
        out << k << ',' << r.scores.counts[static_cast<std::size_t>(k)] << ',' << format_double(r.expected.count(k))
            << '\n';
    out << "\n[pairs]\npair,success\n";
    for (std::size_t i = 0; i < r.pair_success.size(); ++i)
        out << i + 1 << ',' << format_double(r.pair_success[i]) << '\n';
    out << "\n[groups]\ngroup,n,mean\n";
    for (const auto& g : r.groups) out << g.group << ',' << g.n << ',' << format_double(g.mean) << '\n';
}

}  // namespace crowdtt::analysis
