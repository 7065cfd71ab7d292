#include "groupsei/netmodel.h"
#include "groupsei/parse.h"

#include <algorithm>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace groupsei {

bipartite_network bipartite_network::from_memberships(std::vector<std::string> users,
                                                      std::vector<std::string> groups,
                                                      std::vector<std::pair<user_t, group_t>> memberships)
{
    bipartite_network net;
    for (const auto &[u, g] : memberships)
        if (u >= users.size() || g >= groups.size())
            throw std::invalid_argument("membership references unknown user or group");

    std::sort(memberships.begin(), memberships.end());
    memberships.erase(std::unique(memberships.begin(), memberships.end()), memberships.end());

    net.user_off_.assign(users.size() + 1, 0);
    net.group_off_.assign(groups.size() + 1, 0);
    for (const auto &[u, g] : memberships) {
        ++net.user_off_[u + 1];
        ++net.group_off_[g + 1];
    }
    for (std::size_t i = 0; i < users.size(); ++i)
        net.user_off_[i + 1] += net.user_off_[i];
    for (std::size_t i = 0; i < groups.size(); ++i)
        net.group_off_[i + 1] += net.group_off_[i];

    net.user_groups_.resize(memberships.size());
    net.group_users_.resize(memberships.size());
    std::vector<std::size_t> gfill(net.group_off_.begin(), net.group_off_.end() - 1);
    for (std::size_t i = 0; i < memberships.size(); ++i) {
        const auto [u, g] = memberships[i];
        net.user_groups_[i] = g; /* sorted by (u,g): user lists already in place */
        net.group_users_[gfill[g]++] = u;
    }

    net.user_ids_ = std::move(users);
    net.group_ids_ = std::move(groups);
    for (user_t u = 0; u < net.user_ids_.size(); ++u)
        if (!net.user_index_.emplace(net.user_ids_[u], u).second)
            throw std::invalid_argument("duplicate user identifier " + net.user_ids_[u]);
    for (group_t g = 0; g < net.group_ids_.size(); ++g)
        if (!net.group_index_.emplace(net.group_ids_[g], g).second)
            throw std::invalid_argument("duplicate group identifier " + net.group_ids_[g]);
    return net;
}

std::optional<group_t> bipartite_network::find_group(const std::string &id) const
{
    const auto it = group_index_.find(id);
    if (it == group_index_.end())
        return std::nullopt;
    return it->second;
}

std::optional<user_t> bipartite_network::find_user(const std::string &id) const
{
    const auto it = user_index_.find(id);
    if (it == user_index_.end())
        return std::nullopt;
    return it->second;
}

std::size_t bipartite_network::max_memberships_per_user() const
{
    std::size_t best = 0;
    for (user_t u = 0; u < num_users(); ++u)
        best = std::max(best, groups_of(u).size());
    return best;
}

void membership_builder::add_user(const std::string &user)
{
    if (user_index_.emplace(user, static_cast<user_t>(users_.size())).second)
        users_.push_back(user);
}

void membership_builder::add_group(const std::string &group)
{
    if (group_index_.emplace(group, static_cast<group_t>(groups_.size())).second)
        groups_.push_back(group);
}

void membership_builder::add(const std::string &user, const std::string &group)
{
    add_user(user);
    add_group(group);
    pairs_.emplace_back(user_index_.at(user), group_index_.at(group));
}

bipartite_network membership_builder::build() &&
{
    return bipartite_network::from_memberships(std::move(users_), std::move(groups_), std::move(pairs_));
}

bipartite_network load_memberships(std::istream &in)
{
    membership_builder builder;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto text = trim(line);
        if (text.empty())
            continue;
        if (lineno == 1 && text == "user_id,group_id")
            continue;
        const auto fields = split_csv(text);
        if (fields.size() != 2)
            throw parse_error("expected 2 fields `user_id,group_id`, got " + std::to_string(fields.size()), lineno);
        if (fields[0].empty() || fields[1].empty())
            throw parse_error("empty identifier", lineno);
        builder.add(fields[0], fields[1]);
    }
    return std::move(builder).build();
}

bipartite_network load_memberships_file(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("unable to open file: " + path);
    return load_memberships(in);
}

void write_memberships(std::ostream &out, const bipartite_network &net)
{
    out << "user_id,group_id\n";
    for (user_t u = 0; u < net.num_users(); ++u)
        for (group_t g : net.groups_of(u))
            out << net.user_id(u) << ',' << net.group_id(g) << '\n';
}

graph project_groups(const bipartite_network &net)
{
    std::vector<std::uint64_t> pairs;
    for (user_t u = 0; u < net.num_users(); ++u) {
        const auto gs = net.groups_of(u);
        for (std::size_t i = 0; i < gs.size(); ++i)
            for (std::size_t j = i + 1; j < gs.size(); ++j)
                pairs.push_back((static_cast<std::uint64_t>(gs[i]) << 32) | gs[j]);
    }
    std::sort(pairs.begin(), pairs.end());

    std::vector<edge> edges;
    for (std::size_t i = 0; i < pairs.size();) {
        std::size_t j = i;
        while (j < pairs.size() && pairs[j] == pairs[i])
            ++j;
        edges.push_back({static_cast<node_t>(pairs[i] >> 32), static_cast<node_t>(pairs[i] & 0xFFFFFFFFu),
                         static_cast<std::uint32_t>(j - i)});
        i = j;
    }
    return graph::from_edges(net.num_groups(), std::move(edges), net.group_ids());
}

std::vector<std::vector<node_t>> connected_components(const graph &g)
{
    const auto n = g.num_nodes();
    constexpr node_t unseen = std::numeric_limits<node_t>::max();
    std::vector<node_t> comp_of(n, unseen);
    std::vector<std::vector<node_t>> comps;
    std::vector<node_t> queue;
    for (node_t s = 0; s < n; ++s) {
        if (comp_of[s] != unseen)
            continue;
        const auto id = static_cast<node_t>(comps.size());
        comps.emplace_back();
        queue.assign(1, s);
        comp_of[s] = id;
        for (std::size_t head = 0; head < queue.size(); ++head)
            for (node_t w : g.neighbors(queue[head]))
                if (comp_of[w] == unseen) {
                    comp_of[w] = id;
                    queue.push_back(w);
                }
        std::sort(queue.begin(), queue.end());
        comps.back() = queue;
    }

    /* smallest identifier within each component */
    std::vector<std::string> key(comps.size());
    if (g.has_labels())
        for (std::size_t c = 0; c < comps.size(); ++c) {
            key[c] = g.name(comps[c].front());
            for (node_t v : comps[c])
                key[c] = std::min(key[c], g.name(v));
        }
    std::vector<std::size_t> order(comps.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (comps[x].size() != comps[y].size())
            return comps[x].size() > comps[y].size();
        if (g.has_labels() && key[x] != key[y])
            return key[x] < key[y];
        return comps[x].front() < comps[y].front();
    });
    std::vector<std::vector<node_t>> out;
    out.reserve(comps.size());
    for (auto i : order)
        out.push_back(std::move(comps[i]));
    return out;
}

graph largest_component(const graph &g)
{
    const auto comps = connected_components(g);
    if (comps.empty())
        return g;
    return g.induced(comps.front());
}

double lcc_fraction(const graph &g)
{
    if (g.num_nodes() == 0)
        return 0.0;
    const auto comps = connected_components(g);
    return static_cast<double>(comps.front().size()) / static_cast<double>(g.num_nodes());
}

bipartite_network restrict_bipartite_to_component(const bipartite_network &net, const graph &component)
{
    std::vector<char> keep_group(net.num_groups(), 0);
    for (node_t v = 0; v < component.num_nodes(); ++v) {
        const auto name = component.name(v);
        const auto g = net.find_group(name);
        if (!g)
            throw std::invalid_argument("component references unknown group " + name);
        keep_group[*g] = 1;
    }

    membership_builder builder;
    for (group_t g = 0; g < net.num_groups(); ++g)
        if (keep_group[g])
            builder.add_group(net.group_id(g));
    for (user_t u = 0; u < net.num_users(); ++u)
        for (group_t g : net.groups_of(u))
            if (keep_group[g])
                builder.add(net.user_id(u), net.group_id(g));
    return std::move(builder).build();
}

} // namespace groupsei
