// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <fstream>
#include <set>

#include "mpcs/experiments.hpp"

namespace mpcs
{

using nlohmann::json;

namespace
{
[[noreturn]] void config_error(const std::string& what)
{
    throw Error(ErrorKind::config, what);
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where)
{
    if (!j.is_object())
        config_error(where + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto const& [key, value] : j.items())
    {
        if (!ok.count(key))
            config_error(where + ": unknown key '" + key + "'");
    }
}

double get_number(const json& j, const char* key, double fallback,
                  const std::string& where)
{
    if (!j.contains(key))
        return fallback;
    if (!j.at(key).is_number())
        config_error(where + "." + key + ": expected a number");
    return j.at(key).get<double>();
}

std::uint64_t get_uint(const json& j, const char* key, std::uint64_t fallback,
                       const std::string& where)
{
    if (!j.contains(key))
        return fallback;
    if (!j.at(key).is_number_unsigned() && !j.at(key).is_number_integer())
        config_error(where + "." + key + ": expected a non-negative integer");
    if (j.at(key).is_number_integer() && j.at(key).get<std::int64_t>() < 0)
        config_error(where + "." + key + ": expected a non-negative integer");
    return j.at(key).get<std::uint64_t>();
}

Vec get_vec(const json& j, const char* key, int dim, Vec fallback,
            const std::string& where)
{
    if (!j.contains(key))
        return fallback;
    auto const& a = j.at(key);
    Vec v{0, 0, 0};
    if (a.is_number())
    {
        for (int i = 0; i < dim; ++i)
            v[i] = a.get<double>();
        return v;
    }
    if (!a.is_array() || static_cast<int>(a.size()) != dim)
        config_error(where + "." + key + ": expected " + std::to_string(dim)
                     + " numbers");
    for (int i = 0; i < dim; ++i)
    {
        if (!a[i].is_number())
            config_error(where + "." + key + ": expected numbers");
        v[i] = a[i].get<double>();
    }
    return v;
}

Box box_from_json(const json& j, int dim, const std::string& where)
{
    check_keys(j, {"lo", "hi"}, where);
    Box b;
    b.dim = dim;
    b.lo = get_vec(j, "lo", dim, Vec{0, 0, 0}, where);
    b.hi = get_vec(j, "hi", dim, Vec{1, 1, 1}, where);
    if (b.empty())
        config_error(where + ": degenerate box");
    return b;
}

MixingLaw mixing_from_json(const json& j, const std::string& where)
{
    if (!j.is_array())
        config_error(where + ": expected a list of atoms");
    std::vector<MixingLaw::Atom> atoms;
    for (auto const& a : j)
    {
        check_keys(a, {"z", "w"}, where);
        atoms.push_back({get_number(a, "z", 1, where),
                         get_number(a, "w", 1, where)});
    }
    try
    {
        return MixingLaw(std::move(atoms));
    }
    catch (const Error& e)
    {
        config_error(where + ": " + e.what());
    }
}

SpatialField::Term term_from_json(const json& j, int dim,
                                  const std::string& where)
{
    check_keys(j, {"amp", "x"}, where);
    SpatialField::Term t;
    t.amp = get_number(j, "amp", 1, where);
    if (!j.contains("x") || !j.at("x").is_array()
        || static_cast<int>(j.at("x").size()) != dim)
        config_error(where + ".x: expected one factor per dimension");
    for (auto const& f : j.at("x"))
        t.factors.push_back(factor_from_json(f));
    return t;
}

SpatialField field_from_json(const json& j, int dim, const std::string& where)
{
    if (!j.is_array())
        config_error(where + ": expected a list of terms");
    std::vector<SpatialField::Term> terms;
    for (auto const& t : j)
        terms.push_back(term_from_json(t, dim, where));
    return SpatialField(dim, std::move(terms));
}
}  // namespace

Factor factor_from_json(const json& j)
{
    const std::string where = "factor";
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
        config_error("factor: expected an object with a 'kind'");
    auto kind = j.at("kind").get<std::string>();
    if (kind == "constant")
    {
        check_keys(j, {"kind", "value"}, where);
        return Factor::constant(get_number(j, "value", 1, where));
    }
    if (kind == "linear")
    {
        check_keys(j, {"kind"}, where);
        return Factor::linear();
    }
    if (kind == "bump")
    {
        check_keys(j, {"kind", "center", "radius"}, where);
        double r = get_number(j, "radius", 1, where);
        if (!(r > 0))
            config_error("bump radius must be positive");
        return Factor::bump(get_number(j, "center", 0, where), r);
    }
    if (kind == "plateau")
    {
        check_keys(j, {"kind", "center", "half_width", "ramp"}, where);
        double h = get_number(j, "half_width", 1, where);
        double r = get_number(j, "ramp", 1, where);
        if (!(h >= 0) || !(r > 0))
            config_error("plateau needs half_width >= 0 and ramp > 0");
        return Factor::plateau(get_number(j, "center", 0, where), h, r);
    }
    if (kind == "hermite")
    {
        check_keys(j, {"kind", "n"}, where);
        return Factor::hermite(static_cast<int>(get_uint(j, "n", 0, where)));
    }
    if (kind == "gauss_poly")
    {
        check_keys(j, {"kind", "coeffs", "alpha", "center"}, where);
        std::vector<double> c;
        if (j.contains("coeffs"))
        {
            if (!j.at("coeffs").is_array())
                config_error("gauss_poly.coeffs: expected numbers");
            for (auto const& x : j.at("coeffs"))
                c.push_back(x.get<double>());
        }
        double alpha = get_number(j, "alpha", 0.5, where);
        if (!(alpha > 0))
            config_error("gauss_poly alpha must be positive");
        return Factor::gauss_poly(c, alpha, get_number(j, "center", 0, where));
    }
    config_error("unknown factor kind '" + kind + "'");
}

TestFunction test_function_from_json(const json& j, int dim)
{
    const std::string where = "test_function";
    check_keys(j, {"terms", "offset"}, where);
    std::vector<TestFunction::Term> terms;
    if (j.contains("terms"))
    {
        if (!j.at("terms").is_array())
            config_error("test_function.terms: expected a list");
        for (auto const& t : j.at("terms"))
        {
            check_keys(t, {"amp", "x", "s", "log_mark"}, where + ".terms");
            TestFunction::Term term;
            term.amp = get_number(t, "amp", 1, where);
            if (!t.contains("x") || !t.at("x").is_array()
                || static_cast<int>(t.at("x").size()) != dim)
                config_error(where + ".x: expected one factor per dimension");
            for (auto const& f : t.at("x"))
                term.x.push_back(factor_from_json(f));
            if (t.contains("s"))
                term.s = factor_from_json(t.at("s"));
            if (t.contains("log_mark"))
            {
                if (!t.at("log_mark").is_boolean())
                    config_error(where + ".log_mark: expected a boolean");
                term.log_mark = t.at("log_mark").get<bool>();
            }
            terms.push_back(std::move(term));
        }
    }
    return TestFunction(dim, std::move(terms), get_number(j, "offset", 0, where));
}

LieElement lie_element_from_json(const json& j, int dim)
{
    const std::string where = "lie_element";
    check_keys(j, {"v", "a"}, where);
    std::vector<SpatialField> v(dim, SpatialField(dim));
    if (j.contains("v"))
    {
        auto const& jv = j.at("v");
        if (!jv.is_array() || static_cast<int>(jv.size()) != dim)
            config_error(where + ".v: expected one term list per dimension");
        for (int i = 0; i < dim; ++i)
            v[i] = field_from_json(jv[i], dim, where + ".v");
    }
    SpatialField a(dim);
    if (j.contains("a"))
        a = field_from_json(j.at("a"), dim, where + ".a");
    return LieElement(std::move(v), std::move(a));
}

LevyModel model_from_json(const json& j)
{
    const std::string where = "model";
    check_keys(j, {"dim", "spatial", "marks"}, where);
    int dim = static_cast<int>(get_uint(j, "dim", 1, where));
    if (dim < 1 || dim > kMaxDim)
        config_error("model.dim must be 1, 2 or 3");

    SpatialSpec sp;
    if (j.contains("spatial"))
    {
        auto const& js = j.at("spatial");
        check_keys(js, {"family", "level", "lo", "hi", "mean", "variance"},
                   "model.spatial");
        auto fam = js.value("family", std::string("uniform"));
        if (fam == "uniform")
            sp.family = SpatialFamily::uniform;
        else if (fam == "gaussian")
            sp.family = SpatialFamily::gaussian;
        else
            config_error("unknown spatial family '" + fam + "'");
        sp.level = get_number(js, "level", 1, "model.spatial");
        sp.box.dim = dim;
        sp.box.lo = get_vec(js, "lo", dim, Vec{0, 0, 0}, "model.spatial");
        sp.box.hi = get_vec(js, "hi", dim, Vec{1, 1, 1}, "model.spatial");
        sp.mean = get_vec(js, "mean", dim, Vec{0, 0, 0}, "model.spatial");
        sp.variance = get_number(js, "variance", 1, "model.spatial");
    }
    else
    {
        sp.box = Box::cube(dim, 0, 1);
    }

    MarkSpec mk;
    if (j.contains("marks"))
    {
        auto const& jm = j.at("marks");
        check_keys(jm,
                   {"family", "rate", "rate_slope", "shape", "mu", "mu_slope",
                    "sigma2", "profile"},
                   "model.marks");
        auto fam = jm.value("family", std::string("exponential"));
        if (fam == "exponential")
            mk.family = MarkFamily::exponential;
        else if (fam == "gamma")
            mk.family = MarkFamily::gamma;
        else if (fam == "lognormal")
            mk.family = MarkFamily::lognormal;
        else
            config_error("unknown mark family '" + fam + "'");
        mk.rate = get_number(jm, "rate", 1, "model.marks");
        mk.rate_slope = get_number(jm, "rate_slope", 0, "model.marks");
        mk.shape = get_number(jm, "shape", 1, "model.marks");
        mk.mu = get_number(jm, "mu", 0, "model.marks");
        mk.mu_slope = get_number(jm, "mu_slope", 0, "model.marks");
        mk.sigma2 = get_number(jm, "sigma2", 1, "model.marks");
        if (jm.contains("profile"))
            mk.profile = field_from_json(jm.at("profile"), dim,
                                         "model.marks.profile");
    }
    try
    {
        return LevyModel(dim, sp, mk);
    }
    catch (const Error& e)
    {
        config_error(std::string("model: ") + e.what());
    }
}

//---------------------------------------------------------------------------//
ExperimentConfig parse_config(const json& j)
{
    check_keys(j,
               {"seed", "workers", "samples", "inner_samples", "z_max",
                "fixture_seed", "fixtures", "flow", "model", "window",
                "measure", "mixture", "fixture_set", "experiments",
                "overrides"},
               "config");
    ExperimentConfig c;
    c.raw = j;
    c.seed = get_uint(j, "seed", c.seed, "config");
    c.workers = static_cast<int>(get_uint(j, "workers", 1, "config"));
    if (c.workers < 1)
        config_error("config.workers must be >= 1");
    c.samples = get_uint(j, "samples", c.samples, "config");
    c.inner_samples = get_uint(j, "inner_samples", c.inner_samples, "config");
    if (c.samples < 2 || c.inner_samples < 2)
        config_error("sample counts must be >= 2");
    c.z_max = get_number(j, "z_max", c.z_max, "config");
    if (!(c.z_max > 0))
        config_error("config.z_max must be positive");
    c.fixture_seed = get_uint(j, "fixture_seed", c.fixture_seed, "config");
    c.fixtures = static_cast<int>(get_uint(j, "fixtures", 5, "config"));
    if (c.fixtures < 1)
        config_error("config.fixtures must be >= 1");

    if (j.contains("flow"))
    {
        auto const& jf = j.at("flow");
        check_keys(jf, {"step", "t_max"}, "config.flow");
        c.flow.step = get_number(jf, "step", c.flow.step, "config.flow");
        c.flow.t_max = get_number(jf, "t_max", c.flow.t_max, "config.flow");
        if (!(c.flow.step > 0) || !(c.flow.t_max > 0))
            config_error("flow step and t_max must be positive");
    }
    if (j.contains("model"))
        c.model = model_from_json(j.at("model"));
    int dim = c.model.dim();
    if (j.contains("window"))
    {
        c.window = box_from_json(j.at("window"), dim, "config.window");
    }
    else if (c.model.spatial().family == SpatialFamily::uniform)
    {
        c.window = c.model.spatial().box;
    }
    else
    {
        c.window = Box::cube(dim, -8, 8);
    }
    if (!(c.model.sigma_mass(c.window) > 0))
        config_error("window carries no intensity");

    if (j.contains("measure"))
    {
        auto const& jm = j.at("measure");
        check_keys(jm, {"kind", "atoms"}, "config.measure");
        auto kind = jm.value("kind", std::string("poisson"));
        if (kind == "mixed")
        {
            if (!jm.contains("atoms"))
                config_error("mixed measure needs atoms");
            c.measure = mixing_from_json(jm.at("atoms"), "config.measure.atoms");
        }
        else if (kind != "poisson")
        {
            config_error("measure kind must be poisson or mixed");
        }
        else if (jm.contains("atoms"))
        {
            config_error("poisson measure takes no atoms");
        }
    }
    if (j.contains("mixture"))
        c.mixture = mixing_from_json(j.at("mixture"), "config.mixture");

    if (j.contains("fixture_set"))
    {
        auto const& jf = j.at("fixture_set");
        check_keys(jf, {"test_functions", "lie_elements"}, "config.fixture_set");
        if (jf.contains("test_functions"))
        {
            for (auto const& t : jf.at("test_functions"))
            {
                auto tf = test_function_from_json(t, dim);
                auto sup = tf.support();
                if (!tf.compact() || !c.window.contains(sup.x.lo)
                    || !c.window.contains(sup.x.hi))
                    config_error("fixture test functions must have support "
                                 "inside the window");
                c.test_functions.push_back(std::move(tf));
            }
        }
        if (jf.contains("lie_elements"))
        {
            for (auto const& t : jf.at("lie_elements"))
            {
                auto xi = lie_element_from_json(t, dim);
                auto sup = xi.support();
                if (!sup.empty()
                    && (!c.window.contains(sup.lo) || !c.window.contains(sup.hi)))
                    config_error("fixture Lie elements must have support "
                                 "inside the window");
                c.lie_elements.push_back(std::move(xi));
            }
        }
    }

    if (j.contains("experiments"))
    {
        if (!j.at("experiments").is_array())
            config_error("config.experiments: expected a list of names");
        for (auto const& e : j.at("experiments"))
        {
            if (!e.is_string())
                config_error("config.experiments: expected names");
            auto name = e.get<std::string>();
            if (!find_experiment(name))
                config_error("unknown experiment '" + name + "'");
            c.experiments.push_back(name);
        }
    }
    if (j.contains("overrides"))
    {
        for (auto const& [name, jo] : j.at("overrides").items())
        {
            if (!find_experiment(name))
                config_error("override for unknown experiment '" + name + "'");
            check_keys(jo, {"samples", "z_max", "tolerance_scale"},
                       "config.overrides." + name);
            ExperimentOverride o;
            if (jo.contains("samples"))
                o.samples = get_uint(jo, "samples", 0, "overrides");
            if (jo.contains("z_max"))
                o.z_max = get_number(jo, "z_max", 4, "overrides");
            if (jo.contains("tolerance_scale"))
                o.tolerance_scale = get_number(jo, "tolerance_scale", 1,
                                               "overrides");
            if ((o.samples && *o.samples < 2) || (o.z_max && !(*o.z_max > 0))
                || (o.tolerance_scale && !(*o.tolerance_scale > 0)))
                config_error("invalid override for '" + name + "'");
            c.overrides[name] = o;
        }
    }
    return c;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        config_error("cannot open config file '" + path + "'");
    json j;
    try
    {
        in >> j;
    }
    catch (const json::exception& e)
    {
        config_error(std::string("invalid JSON: ") + e.what());
    }
    return parse_config(j);
}

std::string config_hash(const json& j)
{
    // FNV-1a over the canonical dump (object keys are sorted)
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : j.dump())
    {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::size_t ExperimentConfig::samples_for(const std::string& name,
                                          std::size_t fallback) const
{
    auto it = overrides.find(name);
    if (it != overrides.end() && it->second.samples)
        return *it->second.samples;
    return fallback;
}

double ExperimentConfig::z_max_for(const std::string& name) const
{
    auto it = overrides.find(name);
    if (it != overrides.end() && it->second.z_max)
        return *it->second.z_max;
    return z_max;
}

double ExperimentConfig::tolerance_scale_for(const std::string& name) const
{
    auto it = overrides.find(name);
    if (it != overrides.end() && it->second.tolerance_scale)
        return *it->second.tolerance_scale;
    return 1;
}

}  // namespace mpcs
