#pragma once

#include <string>
#include <vector>

#include "apsafe/gsn/case.hpp"

namespace apsafe::gsn {

/// Claim point labels on the links from G3-1 to the learning and data arguments.
inline constexpr const char* kLearningAcp = "ACP-learning";
inline constexpr const char* kDataAcp = "ACP-data";

namespace detail {

inline std::string join_lines(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : " ") + s;
    return out;
}

inline std::string controller_registry() {
    return join_lines({
        "Requirements of the learning-enabled controller for {scope}:",
        "RQ.C.1 Accurately calculate dose of basal and bolus insulin;",
        "RQ.C.1.1 Determine the output every T minutes;",
        "RQ.C.1.2 Stop dosing if a maximum amount has been delivered by the pump;",
        "RQ.C.1.3 Suspend dosing if the actual or predicted CGM readings fall below a threshold;",
        "RQ.C.1.4 Interrupt in a safe way if trustworthy control is not guaranteed;",
        "RQ.C.1.5 BG should not remain below 10th-percentile threshold for more than {alpha1} minutes;",
        "RQ.C.1.6 BG should not remain above 90th-percentile threshold for more than {alpha2} minutes following a bolus injection;",
        "RQ.C.1.7 BG should not remain above 90th-percentile threshold for more than {alpha3} minutes;",
        "RQ.C.1.8 The BG value is always greater than 70 and less than 180;",
        "RQ.C.1.9 The controller infuses additional insulin while the blood glucose level is below a target level;",
        "RQ.C.1.10 The morning wake up blood glucose level can not exceed {beta}.",
    });
}

inline std::string ml_registry() {
    return join_lines({
        "ML requirements for {scope}:",
        "ML-RQ1 The ML component should predict the glucose value {horizon} minutes ahead with a mean prediction error of less than {thres} mg/dL;",
        "ML-RQ1.1 BG's rate of change has to be bound by established physiological norms;",
        "ML-RQ1.2 Meal intake has a direct effect on the BG value;",
        "ML-RQ1.3 Exercise has an inverse effect on the BG value;",
        "ML-RQ1.4 Within t minutes of a bolus, there should be an accompanying change in BG of more than alpha;",
        "ML-RQ1.5 The glucose level starts to rise at a specific time after a meal's onset;",
        "ML-RQ1.6 There is a delay between the injection of insulin and the disposal of glucose;",
        "ML-RQ1.7 The blood concentration of insulin reaches its maximum after a particular time;",
        "ML-RQ1.8 Insulin has an inverse effect on the BG value;",
        "ML-RQ2 Perform as required for different patients of different ages/sexes;",
        "ML-RQ3 Perform as required in the presence of external factors such as meals and exercises.",
    });
}

inline std::string data_registry() {
    return join_lines({
        "ML data requirements for {scope} (ages {age_range} years, weights {weight_range} kg):",
        "DR.R1 Each data sample shall assume sensor positioning which is representative of that used on the patients;",
        "DR.R2 The format of each data sample shall be representative of that captured using sensors deployed on the body;",
        "DR.R3 The type of each data sample (insulin) shall be representative of that used;",
        "DR.R4 Each data sample shall represent the diabetes type for which the system is developed;",
        "DR.R5 Each data sample shall represent the sex, age, and ethnicity of the persons for which the system is developed;",
        "DR.C1 The data samples shall include examples with a sufficient range of meal carbs, different intraday meal intakes, and exercise;",
        "DR.C2 The data samples shall include examples with different sensor positioning;",
        "DR.C3 The data samples shall include examples with different ages and weights within the allowed ranges;",
        "DR.C4 The data samples shall include patients with frequent hypoglycemic, hyperglycemic, and ketoacidosis problems;",
        "DR.C5 The data samples shall include the profile of patients during the day and night and illness;",
        "DR.A1 Each data sample shall assume sensor positioning which is representative of that used on the patients;",
        "DR.A2 CGM sensor readings and pump infusions must be correctly recorded;",
        "DR.A3 The total insulin delivered must be within the limit in each data sample;",
        "DR.B1 The datasets shall have a comparable number of samples for features.",
    });
}

}  // namespace detail

/// Property ids that have a solution node under G4-1.
inline const std::vector<std::string>& verified_property_ids() {
    static const std::vector<std::string> ids{"ML-RQ1.1", "ML-RQ1.2", "ML-RQ1.4", "ML-RQ1.5",
                                              "ML-RQ1.6", "ML-RQ1.7", "ML-RQ1.8"};
    return ids;
}

inline std::string solution_for_property(const std::string& property_id) { return "Sn-" + property_id; }

/// The APS argument: controller template, ML component, model and data arguments.
inline AssuranceCase builtin_template() {
    using K = NodeKind;
    using A = ArtifactKind;
    constexpr auto P = Instantiation::PerPopulation;
    constexpr auto F = Instantiation::Fixed;

    AssuranceCase c;
    c.name = "aps-learning-enabled-controller";
    auto node = [&](std::string id, K kind, Instantiation inst, std::string text, bool developed = true,
                    std::vector<ArtifactKind> admissible = {}) {
        c.add_node({std::move(id), kind, std::move(text), inst, developed, std::move(admissible)});
    };
    auto sup = [&](std::string from, std::string to, std::string acp = "") {
        c.add_link({std::move(from), std::move(to), LinkKind::SupportedBy, std::move(acp)});
    };
    auto ctx = [&](std::string from, std::string to) {
        c.add_link({std::move(from), std::move(to), LinkKind::InContextOf, ""});
    };

    // Controller level.
    node("G0", K::Goal, F,
         "The learning-enabled controller {controller} is safe and effective while the device is used in treating "
         "the patient.");
    node("C0-1", K::Context, P,
         "Environment and system of the APS controller for {scope}: inputs are the history of CGM values, the "
         "insulin injected and the prediction horizon; the output is the amount of insulin to be injected; "
         "environmental phenomena are uncertain meal intake and daily activity.");
    node("C0-2", K::Context, P, detail::controller_registry());
    node("A0-1", K::Assumption, F, "The outputs of the ML component are safe.");
    node("G1-1", K::Goal, F,
         "Assuming that the BG predictions are accurate, the insulin dosage management component is sufficiently "
         "safe and effective for treating patients.",
         false);
    node("G1-2", K::Goal, F, "The ML glucose prediction component is sufficiently safe and effective.");

    // ML component.
    node("C1-1", K::Context, P,
         "The ML glucose prediction component specialized for {scope}: its inputs are CGM, insulin and meal values "
         "from the CGM and pump devices, its outputs are the predicted BG values.");
    node("C1-2", K::Context, P,
         "Performance and robustness requirements allocated to the ML glucose prediction component, independent "
         "of ML technology, with thresholds set for {scope}.");
    node("G2-1", K::Goal, F, "The development of the ML model predicting the BG values is sufficiently safe and effective.");
    node("G2-2", K::Goal, F, "The integration of the ML component into the system is sufficiently safe and effective.",
         false);
    node("C2-1", K::Context, P, detail::ml_registry());
    node("S2-1", K::Strategy, F, "Argument over the design and training of the ML model.");
    node("G3-1", K::Goal, F, "The ML model satisfies the ML requirements.");
    node("G3-2", K::Goal, F,
         "The ML requirements are a valid development of the APS requirements allocated to the glucose prediction "
         "component.");

    // ML model.
    node("C3-1", K::Context, P, "The ML model created: {model}.");
    node("C3-2", K::Context, P, "The ML data, collected from {scope}: {data}.");
    node("G4-1", K::Goal, F, "The ML model satisfies the performance requirements.");
    node("G4-2", K::Goal, F, "The ML model satisfies the robustness requirements.");
    node("GL-1", K::Goal, F, "The process used to design and train the ML model is sufficient.");
    node("G4-3", K::Goal, F,
         "The ML data meet the desiderata of relevance, completeness, balance and accuracy.");

    // ML data.
    node("C4-1", K::Context, P, "Development, test and verification datasets for {scope}: {split}.");
    node("C4-2", K::Context, P, detail::data_registry());
    node("G5-1", K::Goal, F, "The list of ML data requirements is sufficient.");
    node("G5-2", K::Goal, F, "The ML data meet the ML data requirements.");

    // Evidence slots.
    node("Sn-ML-RQ1", K::Solution, F, "Pooled test RMSE against the ML-RQ1 threshold.", true, {A::RmseEval});
    for (const auto& id : verified_property_ids())
        node(solution_for_property(id), K::Solution, F, "Verification verdicts for " + id + ".", true,
             {A::VerificationVerdict});
    node("Sn-ML-RQ2", K::Solution, F, "Prediction error across patients of different ages and sexes.", true,
         {A::RmseEval, A::Manual});
    node("Sn-ML-RQ3", K::Solution, F, "Prediction error in the presence of meals and exercise.", true,
         {A::RmseEval, A::Manual});
    node("Sn-G3-2", K::Solution, F, "Mapping between the allocated requirements and the ML requirements.", true,
         {A::Manual});
    node("Sn-GL-1", K::Solution, F, "Training versus validation loss and the hidden-size ablation.", true,
         {A::RmseEval, A::Manual});
    node("Sn-G5-1", K::Solution, F, "Review of the data requirements against each desideratum.", true, {A::Manual});
    node("Sn-G5-2", K::Solution, F, "Audit of the ML data against the data requirements.", true, {A::AuditReport});

    ctx("G0", "C0-1");
    ctx("G0", "C0-2");
    sup("G0", "G1-1");
    sup("G0", "G1-2");
    ctx("G1-1", "A0-1");
    ctx("G1-1", "C0-2");

    ctx("G1-2", "C1-1");
    ctx("G1-2", "C1-2");
    sup("G1-2", "G2-1");
    sup("G1-2", "G2-2");
    ctx("G2-1", "C2-1");
    sup("G2-1", "S2-1");
    sup("S2-1", "G3-1");
    sup("S2-1", "G3-2");
    sup("G3-2", "Sn-G3-2");

    ctx("G3-1", "C3-1");
    ctx("G3-1", "C3-2");
    sup("G3-1", "G4-1");
    sup("G3-1", "G4-2");
    sup("G3-1", "GL-1", kLearningAcp);
    sup("G3-1", "G4-3", kDataAcp);
    sup("G4-1", "Sn-ML-RQ1");
    for (const auto& id : verified_property_ids()) sup("G4-1", solution_for_property(id));
    sup("G4-2", "Sn-ML-RQ2");
    sup("G4-2", "Sn-ML-RQ3");
    sup("GL-1", "Sn-GL-1");

    ctx("G4-3", "C4-1");
    ctx("G4-3", "C4-2");
    sup("G4-3", "G5-1");
    sup("G4-3", "G5-2");
    sup("G5-1", "Sn-G5-1");
    sup("G5-2", "Sn-G5-2");
    return c;
}

/// Values for every template slot.
inline Profile example_profile(Profile::Mode mode = Profile::Mode::Population) {
    Profile p;
    p.mode = mode;
    p.values = {{"controller", "APS"},
                {"alpha1", "15"},
                {"alpha2", "120"},
                {"alpha3", "240"},
                {"beta", "180"},
                {"horizon", "30"},
                {"thres", "12"},
                {"model", "feed-forward network 36-8-8-6 with ReLU activations"},
                {"data", "simulated T1D traces, 40 days per patient"},
                {"split", "80% development, 20% test, verification on the trained network"},
                {"age_range", "7-64"},
                {"weight_range", "20-120"}};
    return p;
}

}  // namespace apsafe::gsn
