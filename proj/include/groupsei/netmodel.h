#pragma once

#include "groupsei/graph.h"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace groupsei {

using user_t = std::uint32_t;
using group_t = std::uint32_t;

/* Two-mode user/group membership structure. Identifiers are interned to
 * dense indices; both directions of the membership relation are kept in
 * CSR form with sorted lists. Immutable after construction. */
class bipartite_network {
public:
    bipartite_network() = default;

    /* memberships are (user index, group index); duplicates are dropped */
    static bipartite_network from_memberships(std::vector<std::string> users, std::vector<std::string> groups,
                                              std::vector<std::pair<user_t, group_t>> memberships);

    std::size_t num_users() const { return user_ids_.size(); }
    std::size_t num_groups() const { return group_ids_.size(); }
    std::size_t num_memberships() const { return user_groups_.size(); }
    bool empty() const { return user_ids_.empty(); }

    std::span<const group_t> groups_of(user_t u) const
    {
        return {user_groups_.data() + user_off_[u], user_groups_.data() + user_off_[u + 1]};
    }
    std::span<const user_t> members_of(group_t g) const
    {
        return {group_users_.data() + group_off_[g], group_users_.data() + group_off_[g + 1]};
    }

    const std::string &user_id(user_t u) const { return user_ids_[u]; }
    const std::string &group_id(group_t g) const { return group_ids_[g]; }
    const std::vector<std::string> &group_ids() const { return group_ids_; }
    std::optional<group_t> find_group(const std::string &id) const;
    std::optional<user_t> find_user(const std::string &id) const;

    std::size_t max_memberships_per_user() const;

private:
    std::vector<std::string> user_ids_;
    std::vector<std::string> group_ids_;
    std::unordered_map<std::string, user_t> user_index_;
    std::unordered_map<std::string, group_t> group_index_;
    std::vector<std::size_t> user_off_{0};
    std::vector<group_t> user_groups_;
    std::vector<std::size_t> group_off_{0};
    std::vector<user_t> group_users_;
};

/* Interns string identifiers in first-appearance order. */
class membership_builder {
public:
    void add(const std::string &user, const std::string &group);
    void add_user(const std::string &user);
    void add_group(const std::string &group);
    bipartite_network build() &&;

private:
    std::vector<std::string> users_, groups_;
    std::unordered_map<std::string, user_t> user_index_, group_index_;
    std::vector<std::pair<user_t, group_t>> pairs_;
};

/* `user_id,group_id` records, one per line; a first line equal to the
 * literal header is skipped, blank lines are ignored. Throws parse_error. */
bipartite_network load_memberships(std::istream &in);
bipartite_network load_memberships_file(const std::string &path);
void write_memberships(std::ostream &out, const bipartite_network &net);

/* Groups adjacent iff they share at least one member; edge weight is the
 * number of shared members. Node order and labels follow the network's
 * group order. */
graph project_groups(const bipartite_network &net);

/* Components ordered by size descending, ties broken by the smallest node
 * identifier; members of each component ascending by index. */
std::vector<std::vector<node_t>> connected_components(const graph &g);
graph largest_component(const graph &g);
double lcc_fraction(const graph &g);

/* Keeps the groups named in `component` and the users with at least one
 * membership among them. Throws std::invalid_argument for unknown groups. */
bipartite_network restrict_bipartite_to_component(const bipartite_network &net, const graph &component);

} // namespace groupsei
