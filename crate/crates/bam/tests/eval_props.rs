//! Property tests for evaluation: scheduling never changes results, additive
//! models behave linearly, missing data defaults are total and warned about,
//! and verification of the evaluator's own output is always clean.

use bam::eval::{
    cube_to_csv, evaluate, evaluate_sequential, verify_against, EvalOptions, RollupMode, Value,
    ValueCube,
};
use bam::grid::expand;
use bam::model::{analyze, SemanticModel, VarKind};
use bam::synth::{synth_inputs, synth_model, FormulaShape, SynthConfig};
use proptest::prelude::*;

fn arb_model_and_seed(shape: FormulaShape) -> impl Strategy<Value = (SemanticModel, u64)> {
    (any::<u64>(), 1u32..5, 0usize..3, 1usize..8, 1usize..8, 1usize..4).prop_map(
        move |(seed, periods, hierarchy_count, inputs, calcs, reports)| {
            let config =
                SynthConfig { shape, periods, hierarchy_count, inputs, calcs, reports };
            let model = analyze(synth_model(seed, &config)).expect("generated models analyze");
            (model, seed)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parallel_and_sequential_evaluation_are_bit_identical(
        (model, seed) in arb_model_and_seed(FormulaShape::Mixed),
        gap in 0.0f64..0.4,
    ) {
        let grid = expand(&model);
        let inputs = synth_inputs(&model, &grid.space, seed, gap);
        for rollup in [RollupMode::Recompute, RollupMode::Sum] {
            let options = EvalOptions { rollup, strict: false };
            let par = evaluate(&model, &grid.space, &inputs, options).expect("evaluates");
            let seq =
                evaluate_sequential(&model, &grid.space, &inputs, options).expect("evaluates");
            prop_assert_eq!(&par.warnings, &seq.warnings);
            for ids in &grid.space.var_instances {
                for &inst in ids {
                    for p in 0..grid.space.period_count {
                        let a = par.cube.get(inst, p).expect("filled");
                        let b = seq.cube.get(inst, p).expect("filled");
                        let same = match (a, b) {
                            (Value::Num(x), Value::Num(y)) => x.to_bits() == y.to_bits(),
                            (Value::Undefined, Value::Undefined) => true,
                            _ => false,
                        };
                        prop_assert!(same, "instance {inst} period {p}: {a:?} vs {b:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn additive_models_scale_linearly(
        (model, seed) in arb_model_and_seed(FormulaShape::SumsOnly),
        gap in 0.0f64..0.4,
    ) {
        let grid = expand(&model);
        let inputs = synth_inputs(&model, &grid.space, seed, gap);
        let mut tripled = ValueCube::empty(&grid.space);
        for ids in &grid.space.var_instances {
            for &inst in ids {
                for p in 0..grid.space.period_count {
                    if let Some(Value::Num(v)) = inputs.get(inst, p) {
                        tripled.set(inst, p, Value::Num(3.0 * v));
                    }
                }
            }
        }
        let base =
            evaluate(&model, &grid.space, &inputs, EvalOptions::default()).expect("evaluates");
        let scaled =
            evaluate(&model, &grid.space, &tripled, EvalOptions::default()).expect("evaluates");
        // Integer inputs stay small enough that tripling is exact.
        for ids in &grid.space.var_instances {
            for &inst in ids {
                for p in 0..grid.space.period_count {
                    let a = base.cube.get(inst, p).expect("filled");
                    let b = scaled.cube.get(inst, p).expect("filled");
                    match (a, b) {
                        (Value::Num(x), Value::Num(y)) => prop_assert_eq!(3.0 * x, y),
                        other => prop_assert!(false, "unexpected values {other:?}"),
                    }
                }
            }
        }
    }

    #[test]
    fn absent_data_defaults_every_input_to_zero_with_warnings(
        (model, _) in arb_model_and_seed(FormulaShape::Mixed),
    ) {
        let grid = expand(&model);
        let empty = ValueCube::empty(&grid.space);
        let result =
            evaluate(&model, &grid.space, &empty, EvalOptions::default()).expect("evaluates");
        let mut leaf_input_instances = 0usize;
        for (var, info) in model.variables.iter().enumerate() {
            if info.kind != VarKind::Input {
                continue;
            }
            for &inst in &grid.space.var_instances[var] {
                for p in 0..grid.space.period_count {
                    prop_assert_eq!(result.cube.get(inst, p), Some(Value::Num(0.0)));
                }
                if grid.space.fold_children[inst].is_none() {
                    leaf_input_instances += 1;
                }
            }
        }
        prop_assert_eq!(result.warnings.len(), leaf_input_instances);
        for warning in &result.warnings {
            prop_assert!(warning.contains("has no data"), "{}", warning);
        }
    }

    #[test]
    fn verifying_own_output_reports_no_mismatches(
        (model, seed) in arb_model_and_seed(FormulaShape::Mixed),
        gap in 0.0f64..0.4,
    ) {
        let grid = expand(&model);
        let inputs = synth_inputs(&model, &grid.space, seed, gap);
        let result =
            evaluate(&model, &grid.space, &inputs, EvalOptions::default()).expect("evaluates");
        let csv = cube_to_csv(&model, &grid.space, &result.cube);
        let report = verify_against(
            &model,
            &grid.space,
            &inputs,
            csv.as_bytes(),
            0.0,
            RollupMode::default(),
        )
        .expect("verification runs");
        prop_assert!(report.mismatches.is_empty(), "{:#?}", report.mismatches);
        prop_assert_eq!(report.compared, grid.space.len() * grid.space.period_count);
        prop_assert_eq!(report.missing, 0);
    }

    #[test]
    fn rollup_modes_coincide_for_additive_formulas(
        (model, seed) in arb_model_and_seed(FormulaShape::SumsOnly),
        gap in 0.0f64..0.4,
    ) {
        let grid = expand(&model);
        let inputs = synth_inputs(&model, &grid.space, seed, gap);
        let sum = evaluate(
            &model,
            &grid.space,
            &inputs,
            EvalOptions { rollup: RollupMode::Sum, strict: false },
        )
        .expect("evaluates");
        let recompute = evaluate(
            &model,
            &grid.space,
            &inputs,
            EvalOptions { rollup: RollupMode::Recompute, strict: false },
        )
        .expect("evaluates");
        prop_assert_eq!(&sum.cube, &recompute.cube);
    }
}
