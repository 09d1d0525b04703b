#include "segbench/taxonomy.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace segbench {

namespace {

const std::array<const char*, 9> kRawNames = {"BACKGROUND", "HEALTHY_LUNG", "GGO",
                                              "CONSOLIDATION", "CPP", "LINEAR_OPACITY",
                                              "RHS", "COMBINED", "OAT"};

EvalClass eval_class_from_string(const std::string& s) {
    if (s == "CON") return EvalClass::CON;
    if (s == "CPP") return EvalClass::CPP;
    if (s == "GGO") return EvalClass::GGO;
    if (s == "COM") return EvalClass::COM;
    if (s == "OAT") return EvalClass::OAT;
    if (s == "BIN") return EvalClass::BIN;
    if (s == "GGO_PLUS_CPP" || s == "GGO+CPP") return EvalClass::GGO_PLUS_CPP;
    throw std::invalid_argument("unknown eval class \"" + s + "\"");
}

} // namespace

const char* to_string(EvalClass cls) {
    switch (cls) {
    case EvalClass::CON: return "CON";
    case EvalClass::CPP: return "CPP";
    case EvalClass::GGO: return "GGO";
    case EvalClass::COM: return "COM";
    case EvalClass::OAT: return "OAT";
    case EvalClass::BIN: return "BIN";
    case EvalClass::GGO_PLUS_CPP: return "GGO+CPP";
    case EvalClass::MEAN: return "MEAN";
    }
    return "?";
}

Taxonomy Taxonomy::defaults() {
    Taxonomy t;
    for (std::uint8_t i = 0; i < kRawNames.size(); ++i)
        t.raw_classes_.push_back({i, kRawNames[i]});
    t.ignore_ = {EvalClass::COM};
    t.build_tables();
    return t;
}

Taxonomy Taxonomy::from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    Taxonomy t;
    std::array<bool, 256> used{};
    for (const auto& [name, idj] : j.at("raw").items()) {
        const int id = idj.get<int>();
        if (id < 0 || id > 255) throw std::invalid_argument("taxonomy raw id outside [0,255]");
        if (used[static_cast<std::size_t>(id)])
            throw std::invalid_argument("taxonomy raw ids must be unique");
        used[static_cast<std::size_t>(id)] = true;
        t.raw_classes_.push_back({static_cast<std::uint8_t>(id), name});
    }
    for (const char* required : kRawNames) {
        bool found = false;
        for (const auto& rc : t.raw_classes_)
            if (rc.name == required) found = true;
        if (!found)
            throw std::invalid_argument(std::string("taxonomy missing raw class ") + required);
    }
    if (j.contains("ignore"))
        for (const auto& s : j.at("ignore")) t.ignore_.insert(eval_class_from_string(s));
    else
        t.ignore_ = {EvalClass::COM};
    t.build_tables();
    if (t.id_of("BACKGROUND") != 0)
        throw std::invalid_argument("taxonomy BACKGROUND id must be 0");
    return t;
}

Taxonomy Taxonomy::from_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open taxonomy file " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return from_json_text(text);
}

void Taxonomy::build_tables() {
    for (const auto& rc : raw_classes_) {
        known_[rc.id] = true;
        by_name_[rc.name] = rc.id;
    }
    auto add = [&](EvalClass cls, const std::string& raw_name) {
        members_[static_cast<std::size_t>(cls)][id_of(raw_name)] = true;
    };
    add(EvalClass::CON, "CONSOLIDATION");
    add(EvalClass::CON, "LINEAR_OPACITY");
    add(EvalClass::CPP, "CPP");
    add(EvalClass::GGO, "GGO");
    add(EvalClass::COM, "COMBINED");
    add(EvalClass::COM, "RHS");
    add(EvalClass::OAT, "OAT");
    // BIN = all lesions: everything except BACKGROUND and HEALTHY_LUNG
    for (const auto& rc : raw_classes_)
        if (rc.name != "BACKGROUND" && rc.name != "HEALTHY_LUNG")
            members_[static_cast<std::size_t>(EvalClass::BIN)][rc.id] = true;
    add(EvalClass::GGO_PLUS_CPP, "GGO");
    add(EvalClass::GGO_PLUS_CPP, "CPP");
    // MEAN stays empty

    for (int l = 0; l < 256; ++l)
        for (EvalClass cls : ignore_)
            if (members_[static_cast<std::size_t>(cls)][static_cast<std::size_t>(l)])
                ignored_label_[static_cast<std::size_t>(l)] = true;
}

std::uint8_t Taxonomy::id_of(const std::string& raw_name) const {
    auto it = by_name_.find(raw_name);
    if (it == by_name_.end())
        throw std::invalid_argument("unknown raw class \"" + raw_name + "\"");
    return it->second;
}

const std::array<bool, 256>& Taxonomy::members_of(EvalClass cls) const {
    return members_[static_cast<std::size_t>(cls)];
}

BinaryMask Taxonomy::project(const LabelVolume& vol, EvalClass cls) const {
    const auto& members = members_of(cls);
    BinaryMask out(vol.dims, vol.spacing);
    for (std::size_t i = 0; i < vol.data.size(); ++i) {
        const std::uint8_t label = vol.data[i];
        if (!known_[label])
            throw std::invalid_argument("unknown raw label " + std::to_string(label));
        out.data[i] = members[label] ? 1 : 0;
    }
    return out;
}

BinaryMask Taxonomy::lung_mask(const LabelVolume& vol) const {
    BinaryMask out(vol.dims, vol.spacing);
    for (std::size_t i = 0; i < vol.data.size(); ++i) {
        const std::uint8_t label = vol.data[i];
        if (!known_[label])
            throw std::invalid_argument("unknown raw label " + std::to_string(label));
        out.data[i] = (label != 0) ? 1 : 0;
    }
    return out;
}

BinaryMask Taxonomy::ignore_mask(const LabelVolume& gt) const {
    BinaryMask out(gt.dims, gt.spacing);
    for (std::size_t i = 0; i < gt.data.size(); ++i) {
        const std::uint8_t label = gt.data[i];
        if (!known_[label])
            throw std::invalid_argument("unknown raw label " + std::to_string(label));
        out.data[i] = ignored_label_[label] ? 1 : 0;
    }
    return out;
}

} // namespace segbench
