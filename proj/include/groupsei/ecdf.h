#pragma once

#include <iosfwd>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace groupsei {

/* Step-function empirical CDF over waiting times in minutes. */
class ecdf {
public:
    ecdf() = default;

    /* throws std::invalid_argument on an empty sample */
    static ecdf from_samples(std::vector<double> samples);
    /* values strictly ascending, probabilities strictly increasing ending at 1 */
    static ecdf from_table(std::vector<double> values, std::vector<double> cum_probs);

    /* smallest value whose cumulative probability exceeds u, u in [0,1) */
    double sample(double u) const;
    /* fraction of mass at or below x */
    double cdf(double x) const;

    std::span<const double> values() const { return values_; }
    std::span<const double> cum_probs() const { return probs_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }
    double mean() const;

private:
    std::vector<double> values_;
    std::vector<double> probs_;
};

/* two-column CSV `value,cum_prob` with header */
void write_ecdf(std::ostream &out, const ecdf &e);
ecdf read_ecdf(std::istream &in);
ecdf read_ecdf_file(const std::string &path);

/* One ECDF per reach-count bucket, keyed by the bucket's lowest count.
 * CSV form `bucket,value,cum_prob`. */
using bucketed_ecdf = std::vector<std::pair<std::uint32_t, ecdf>>;

void write_group_time(std::ostream &out, std::span<const std::pair<std::uint32_t, ecdf>> buckets);
bucketed_ecdf read_group_time(std::istream &in);
bucketed_ecdf read_group_time_file(const std::string &path);

} // namespace groupsei
