#include "sscc/presets.hpp"

namespace sscc {

std::optional<Preset> parse_preset(const std::string& name) {
    if (name == "coal") return Preset::coal;
    if (name == "ecoli") return Preset::ecoli;
    if (name == "wine") return Preset::wine;
    if (name == "eucalyptus") return Preset::eucalyptus;
    return std::nullopt;
}

const char* to_string(Preset preset) {
    switch (preset) {
        case Preset::coal: return "coal";
        case Preset::ecoli: return "ecoli";
        case Preset::wine: return "wine";
        case Preset::eucalyptus: return "eucalyptus";
    }
    return "?";
}

Hyperparameters preset_hyperparameters(Preset preset, ClusterAlgo algorithm,
                                       double noise_fraction) {
    Hyperparameters hp;
    hp.algorithm = algorithm;
    switch (preset) {
        case Preset::coal:
            hp.lambda_cem = 0.9;
            hp.lambda_cs = 0.9;
            hp.lambda_ol = 0.01;
            break;
        case Preset::ecoli:
            hp.lambda_cem = 0.75;
            hp.lambda_cs = 0.75;
            hp.lambda_ol = 0.04;
            break;
        case Preset::wine:
            hp.lambda_cem = 0.7;
            hp.lambda_cs = 0.65;
            hp.lambda_ol = 0.03;
            break;
        case Preset::eucalyptus:
            hp.lambda_cem = algorithm == ClusterAlgo::kmeans ? 0.85 : 0.9;
            hp.lambda_cs = noise_fraction >= 0.20 ? 0.75 : 0.8;
            hp.lambda_ol = 0.02;
            break;
    }
    return hp;
}

}  // namespace sscc
