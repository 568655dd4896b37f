// Walkthrough on one toy sample: attack it, then compare zero-shot, uniform
// ensembling, marginal-entropy tuning, and the full reliability-weighted
// pointwise-entropy method side by side.

#include <cstdio>

#include "rtpt/rtpt.hpp"

using namespace rtpt;

int main() {
  auto backend = make_toy_backend(DenseBackendConfig{});

  ToyDatasetConfig dataset_cfg;
  dataset_cfg.n_samples = 20;
  const Dataset dataset = make_toy_dataset(dataset_cfg, *backend);
  const Sample& sample = dataset.samples[4];
  std::printf("sample %s, true class '%s'\n", sample.id.c_str(),
              dataset.class_names[static_cast<std::size_t>(sample.label)].c_str());

  const ClassHead attacker_head = build_class_head(
      *backend, backend->init_prompt("a photo of a []"), dataset.class_names);
  AttackSpec spec = AttackSpec::preset("paper-rn50");
  spec.epsilon = 4.0;
  const AdversarialRecord adv =
      run_attack(*backend, attacker_head, sample.image, sample.label, spec, sample.id);
  std::printf("pgd eps=%.1f/255: attacker now predicts '%s' (|delta|_inf = %.5f)\n",
              spec.epsilon,
              dataset.class_names[static_cast<std::size_t>(adv.attacker_prediction)].c_str(),
              adv.achieved_linf);

  MethodConfig cfg;
  for (Method m : {Method::kZeroshot, Method::kEnsemble, Method::kTpt, Method::kRtpt}) {
    cfg.method = m;
    const auto clean = run_inference(*backend, dataset.class_names, sample.image, cfg, 0);
    const auto attacked = run_inference(*backend, dataset.class_names, adv.image, cfg, 0);
    std::printf("%-9s clean -> %-9s attacked -> %-9s\n", cfg.name().c_str(),
                dataset.class_names[static_cast<std::size_t>(clean.predicted_class)].c_str(),
                dataset.class_names[static_cast<std::size_t>(attacked.predicted_class)].c_str());
  }

  cfg.method = Method::kRtpt;
  const auto outcome = run_inference(*backend, dataset.class_names, adv.image, cfg, 0);
  write_weight_bars_svg(outcome.view_weights, "weights.svg");
  std::printf("original-view weight %.5f vs uniform %.5f (see weights.svg)\n",
              outcome.view_weights[0], 1.0 / static_cast<double>(outcome.view_weights.size()));
  return 0;
}
