//! Random transform sequences interpreted against the current model.

use proptest::prelude::*;
use sheetgram_core::arrows::{
    apply, compile, decompile, generalize, infer_index_labels, instantiate, validate_model, Model, Transform,
};
use sheetgram_core::factbase::FactBase;
use sheetgram_core::{Address, Workbook};

#[derive(Debug, Clone)]
pub struct Step {
    pub kind: u8,
    pub pick: usize,
    pub len: usize,
    pub tag: u16,
}

pub fn steps() -> impl Strategy<Value = Vec<Step>> {
    prop::collection::vec(
        (0u8..5, any::<usize>(), 1usize..5, any::<u16>()).prop_map(|(kind, pick, len, tag)| Step {
            kind,
            pick,
            len,
            tag,
        }),
        1..=10,
    )
}

/// Turn a random step into a transform that makes sense for `m`.
pub fn concretize(step: &Step, m: &Model, fb: &FactBase) -> Option<Transform> {
    let attrs = m.attributes();
    let chosen = &attrs[step.pick % attrs.len()];
    match step.kind {
        0 => {
            // A run of single, unnamed cells down one column.
            let singles: Vec<&Address> = attrs
                .iter()
                .filter(|a| a.is_single_cell() && a.label_meta.is_none())
                .map(|a| &a.layout[0])
                .collect();
            let start = step.pick % singles.len().max(1);
            let first = singles.get(start)?;
            let cells: Vec<Address> = singles[start..]
                .iter()
                .take_while(|a| a.sheet == first.sheet && a.col == first.col)
                .take(step.len)
                .map(|a| (*a).clone())
                .collect();
            Some(Transform::Group {
                cells,
                name: format!("g{}", step.tag),
            })
        }
        1 => Some(Transform::Rename {
            old: chosen.name.clone(),
            new: format!("r{}", step.tag),
        }),
        2 => Some(Transform::Ungroup {
            name: chosen.name.clone(),
        }),
        3 => Some(Transform::NameFromLabel {
            name: chosen.name.clone(),
        }),
        _ => {
            let labels = infer_index_labels(m, &chosen.name, fb)
                .unwrap_or_else(|| (1..=chosen.layout.len()).map(|i| format!("L{i}")).collect());
            Some(Transform::IndexBy {
                name: chosen.name.clone(),
                labels,
            })
        }
    }
}

/// Apply the steps that make sense, checking the model after each one.
pub fn run_steps(wb: &Workbook, steps: &[Step]) -> Result<usize, TestCaseError> {
    let fb = FactBase::build(wb.clone());
    let mut m = decompile(wb);
    let mut applied = 0;
    for step in steps {
        let Some(t) = concretize(step, &m, &fb) else { continue };
        let Ok(next) = apply(&m, &t, &fb) else { continue };
        m = next.model;
        applied += 1;
        prop_assert_eq!(validate_model(&m), Ok(()), "after {}", t);
        let compiled = compile(&m).unwrap();
        prop_assert_eq!(&compiled, wb, "after {}", t);
        for a in m.attributes() {
            if let Ok(Some(template)) = generalize(&m, &a.name) {
                for (i, d) in a.defs.iter().enumerate() {
                    let back = instantiate(&template, &m, &a.name, i);
                    prop_assert_eq!(back.as_ref(), Some(&d.expr));
                }
            }
        }
    }
    Ok(applied)
}
