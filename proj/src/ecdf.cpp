#include "groupsei/ecdf.h"
#include "groupsei/parse.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>

namespace groupsei {

ecdf ecdf::from_samples(std::vector<double> samples)
{
    if (samples.empty())
        throw std::invalid_argument("ecdf: empty sample");
    std::sort(samples.begin(), samples.end());
    ecdf e;
    const auto n = static_cast<double>(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (i + 1 < samples.size() && samples[i + 1] == samples[i])
            continue;
        e.values_.push_back(samples[i]);
        e.probs_.push_back(static_cast<double>(i + 1) / n);
    }
    e.probs_.back() = 1.0;
    return e;
}

ecdf ecdf::from_table(std::vector<double> values, std::vector<double> cum_probs)
{
    if (values.empty() || values.size() != cum_probs.size())
        throw std::invalid_argument("ecdf: table must be non-empty with matching columns");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0 && !(values[i] > values[i - 1]))
            throw std::invalid_argument("ecdf: values must be strictly ascending");
        if (!(cum_probs[i] > (i ? cum_probs[i - 1] : 0.0)) || cum_probs[i] > 1.0 + 1e-12)
            throw std::invalid_argument("ecdf: cumulative probabilities must increase strictly within (0,1]");
    }
    if (std::abs(cum_probs.back() - 1.0) > 1e-9)
        throw std::invalid_argument("ecdf: cumulative probabilities must end at 1");
    cum_probs.back() = 1.0;
    ecdf e;
    e.values_ = std::move(values);
    e.probs_ = std::move(cum_probs);
    return e;
}

double ecdf::sample(double u) const
{
    const auto it = std::upper_bound(probs_.begin(), probs_.end(), u);
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(it - probs_.begin()), values_.size() - 1);
    return values_[i];
}

double ecdf::cdf(double x) const
{
    const auto it = std::upper_bound(values_.begin(), values_.end(), x);
    if (it == values_.begin())
        return 0.0;
    return probs_[static_cast<std::size_t>(it - values_.begin()) - 1];
}

double ecdf::mean() const
{
    double m = 0, prev = 0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        m += values_[i] * (probs_[i] - prev);
        prev = probs_[i];
    }
    return m;
}

void write_ecdf(std::ostream &out, const ecdf &e)
{
    out << "value,cum_prob\n" << std::setprecision(17);
    for (std::size_t i = 0; i < e.size(); ++i)
        out << e.values()[i] << ',' << e.cum_probs()[i] << '\n';
}

ecdf read_ecdf(std::istream &in)
{
    std::vector<double> values, probs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto text = trim(line);
        if (text.empty() || (lineno == 1 && text == "value,cum_prob"))
            continue;
        const auto f = split_csv(text);
        double v = 0, p = 0;
        if (f.size() != 2 || !parse_double(f[0], v) || !parse_double(f[1], p))
            throw parse_error("expected `value,cum_prob`", lineno);
        values.push_back(v);
        probs.push_back(p);
    }
    return ecdf::from_table(std::move(values), std::move(probs));
}

ecdf read_ecdf_file(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("unable to open file: " + path);
    return read_ecdf(in);
}

void write_group_time(std::ostream &out, std::span<const std::pair<std::uint32_t, ecdf>> buckets)
{
    out << "bucket,value,cum_prob\n" << std::setprecision(17);
    for (const auto &[b, e] : buckets)
        for (std::size_t i = 0; i < e.size(); ++i)
            out << b << ',' << e.values()[i] << ',' << e.cum_probs()[i] << '\n';
}

bucketed_ecdf read_group_time(std::istream &in)
{
    std::map<std::uint32_t, std::pair<std::vector<double>, std::vector<double>>> cols;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto text = trim(line);
        if (text.empty() || (lineno == 1 && text == "bucket,value,cum_prob"))
            continue;
        const auto f = split_csv(text);
        std::uint32_t b = 0;
        double v = 0, p = 0;
        if (f.size() != 3 || !parse_uint(f[0], b) || !parse_double(f[1], v) || !parse_double(f[2], p))
            throw parse_error("expected `bucket,value,cum_prob`", lineno);
        cols[b].first.push_back(v);
        cols[b].second.push_back(p);
    }
    std::vector<std::pair<std::uint32_t, ecdf>> out;
    for (auto &[b, c] : cols)
        out.emplace_back(b, ecdf::from_table(std::move(c.first), std::move(c.second)));
    return out;
}

bucketed_ecdf read_group_time_file(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("unable to open file: " + path);
    return read_group_time(in);
}

} // namespace groupsei
