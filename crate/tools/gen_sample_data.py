#!/usr/bin/env python3
"""Regenerate the shipped sample data: lexicon, synthetic corpus, benchmark
dataset, annotation fixtures, Wilcoxon pair fixtures and the quiz.

Everything here is deterministic. The corpus text is synthetic sample prose
written for software testing; it is not clinical guidance.

    python3 tools/gen_sample_data.py
"""

import json
import os

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

# (guideline_key, title, genes, drugs)
LEXICON = [
    ("cyp2b6-efavirenz", "CYP2B6 and efavirenz", ["CYP2B6"], ["efavirenz"]),
    ("cyp2c19-clopidogrel", "CYP2C19 and clopidogrel", ["CYP2C19"], ["clopidogrel"]),
    ("cyp2c19-ppis", "CYP2C19 and proton pump inhibitors", ["CYP2C19"], ["proton pump inhibitors"]),
    ("cyp2c19-voriconazole", "CYP2C19 and voriconazole", ["CYP2C19"], ["voriconazole"]),
    ("cyp2c9-nsaids", "CYP2C9 and nonsteroidal anti-inflammatory drugs (NSAIDs)", ["CYP2C9"],
     ["nonsteroidal anti-inflammatory drugs", "nsaids"]),
    ("cyp2c9-hlab-phenytoin", "CYP2C9 and HLA-B and phenytoin", ["CYP2C9", "HLA-B"], ["phenytoin"]),
    ("cyp2c9-vkorc1-cyp4f2-warfarin", "CYP2C9, VKORC1, CYP4F2, and warfarin",
     ["CYP2C9", "CYP4F2", "VKORC1"], ["warfarin"]),
    ("cyp2d6-atomoxetine", "CYP2D6 and atomoxetine", ["CYP2D6"], ["atomoxetine"]),
    ("cyp2d6-ondansetron-tropisetron", "CYP2D6 and ondansetron and tropisetron", ["CYP2D6"],
     ["ondansetron", "tropisetron"]),
    ("cyp2d6-tamoxifen", "CYP2D6 and tamoxifen", ["CYP2D6"], ["tamoxifen"]),
    ("cyp2d6-cyp2c19-tcas", "CYP2D6, CYP2C19, and tricyclic antidepressants", ["CYP2C19", "CYP2D6"],
     ["tricyclic antidepressants"]),
    ("ssri-cyp2d6-cyp2c19-cyp2b6-slc6a4-htr2a",
     "Serotonin reuptake inhibitor antidepressants and CYP2D6, CYP2C19, CYP2B6, SLC6A4, and HTR2A",
     ["CYP2B6", "CYP2C19", "CYP2D6", "HTR2A", "SLC6A4"], ["serotonin reuptake inhibitor antidepressants"]),
    ("opioids-cyp2d6-oprm1-comt", "Opioids and CYP2D6, OPRM1, and COMT", ["COMT", "CYP2D6", "OPRM1"],
     ["opioids"]),
    ("cyp3a5-tacrolimus", "CYP3A5 and tacrolimus", ["CYP3A5"], ["tacrolimus"]),
    ("dpyd-fluoropyrimidines", "DPYD and fluoropyrimidines", ["DPYD"], ["fluoropyrimidines"]),
    ("g6pd-deficiency", "G6PD deficiency", ["G6PD"], []),
    ("hla-carbamazepine-oxcarbazepine", "HLA-A, HLA-B, and carbamazepine and oxcarbazepine",
     ["HLA-A", "HLA-B"], ["carbamazepine", "oxcarbazepine"]),
    ("hlab-abacavir", "HLA-B and abacavir", ["HLA-B"], ["abacavir"]),
    ("hlab-allopurinol", "HLA-B and allopurinol", ["HLA-B"], ["allopurinol"]),
    ("ifnl3-peginterferon", "IFNL3 and peginterferon-alpha-based regimens", ["IFNL3"],
     ["peginterferon-alpha"]),
    ("mtrnr1-aminoglycosides", "MT-RNR1 and aminoglycosides", ["MT-RNR1"], ["aminoglycosides"]),
    ("ryr1-cacna1s-anesthetics", "RYR1, CACNA1S, and volatile anesthetic agents and succinylcholine",
     ["CACNA1S", "RYR1"], ["succinylcholine", "volatile anesthetic agents"]),
    ("statins-slco1b1-abcg2-cyp2c9", "SLCO1B1, ABCG2, CYP2C9, and statins", ["ABCG2", "CYP2C9", "SLCO1B1"],
     ["statins"]),
    ("tpmt-nudt15-thiopurines", "TPMT, NUDT15, and thiopurines", ["NUDT15", "TPMT"], ["thiopurines"]),
    ("ugt1a1-atazanavir", "UGT1A1 and atazanavir", ["UGT1A1"], ["atazanavir"]),
    ("cftr-ivacaftor", "CFTR and ivacaftor", ["CFTR"], ["ivacaftor"]),
]

# Per-guideline synthetic facts: (mechanism sentence, phenotype sentence,
# recommendation sentence, monitoring sentence).
FACTS = {
    "cyp2b6-efavirenz": (
        "Efavirenz is cleared mainly through oxidation by the CYP2B6 enzyme.",
        "CYP2B6 poor metabolizers reach higher efavirenz plasma concentrations than normal metabolizers.",
        "For CYP2B6 poor metabolizers a reduced starting dose of efavirenz can be considered to limit central nervous system effects.",
        "Dizziness, vivid dreams and insomnia should be reviewed after starting efavirenz.",
    ),
    "cyp2c19-clopidogrel": (
        "Clopidogrel is a prodrug that requires activation by CYP2C19 to form its active metabolite.",
        "CYP2C19 poor and intermediate metabolizers form less active clopidogrel metabolite and show reduced platelet inhibition.",
        "For CYP2C19 poor or intermediate metabolizers an alternative antiplatelet agent such as prasugrel or ticagrelor is preferred over clopidogrel when there is no contraindication.",
        "Patients on clopidogrel after coronary stent placement should be monitored for recurrent ischemic events.",
    ),
    "cyp2c19-ppis": (
        "Proton pump inhibitors such as omeprazole and lansoprazole are inactivated by CYP2C19.",
        "CYP2C19 ultrarapid metabolizers clear proton pump inhibitors quickly and may have reduced acid suppression.",
        "For CYP2C19 ultrarapid and rapid metabolizers the proton pump inhibitor starting dose can be increased, while poor metabolizers on long term therapy may need a dose reduction.",
        "Symptom control and the duration of proton pump inhibitor therapy should be reviewed regularly.",
    ),
    "cyp2c19-voriconazole": (
        "Voriconazole is metabolized extensively by CYP2C19.",
        "CYP2C19 ultrarapid metabolizers often have subtherapeutic voriconazole trough concentrations.",
        "For CYP2C19 ultrarapid metabolizers an alternative antifungal agent not dependent on CYP2C19 is recommended instead of voriconazole.",
        "Voriconazole trough levels should be measured to confirm therapeutic exposure.",
    ),
    "cyp2c9-nsaids": (
        "Several nonsteroidal anti-inflammatory drugs including celecoxib, flurbiprofen, ibuprofen and meloxicam are metabolized by CYP2C9.",
        "CYP2C9 poor metabolizers have prolonged NSAIDs half life and higher exposure.",
        "For CYP2C9 poor metabolizers NSAIDs should be started at a reduced dose or an agent not metabolized by CYP2C9 should be selected.",
        "Gastrointestinal bleeding, renal function and blood pressure should be monitored during NSAIDs therapy.",
    ),
    "cyp2c9-hlab-phenytoin": (
        "Phenytoin is cleared mainly by CYP2C9 and its carriers of HLA-B*15:02 face a higher risk of severe cutaneous reactions.",
        "CYP2C9 intermediate and poor metabolizers accumulate phenytoin and may develop concentration dependent toxicity.",
        "Patients who carry HLA-B*15:02 and have not used phenytoin before should avoid phenytoin, and CYP2C9 poor metabolizers should receive a reduced maintenance dose.",
        "Phenytoin serum concentrations and signs of ataxia or nystagmus should be followed after each dose change.",
    ),
    "cyp2c9-vkorc1-cyp4f2-warfarin": (
        "Warfarin response depends on CYP2C9 metabolism of S-warfarin, VKORC1 target sensitivity and CYP4F2 vitamin K metabolism.",
        "Carriers of reduced function CYP2C9 alleles and the VKORC1 sensitive haplotype need lower warfarin doses.",
        "Warfarin initiation can use a validated dosing algorithm that includes CYP2C9, VKORC1 and CYP4F2 genotypes together with clinical factors.",
        "The international normalized ratio should be checked frequently during warfarin initiation.",
    ),
    "cyp2d6-atomoxetine": (
        "Atomoxetine is metabolized primarily by CYP2D6.",
        "CYP2D6 poor metabolizers have several fold higher atomoxetine exposure than normal metabolizers.",
        "For CYP2D6 poor metabolizers atomoxetine can be started at the usual dose with slower titration guided by plasma concentrations.",
        "Heart rate, blood pressure and response should be reviewed after atomoxetine dose increases.",
    ),
    "cyp2d6-ondansetron-tropisetron": (
        "Ondansetron and tropisetron are antiemetics that are metabolized by CYP2D6.",
        "CYP2D6 ultrarapid metabolizers clear ondansetron and tropisetron faster and have a higher risk of treatment failure.",
        "For CYP2D6 ultrarapid metabolizers an antiemetic not predominantly metabolized by CYP2D6 such as granisetron is recommended.",
        "Nausea and vomiting control should be assessed after the first chemotherapy cycle.",
    ),
    "cyp2d6-tamoxifen": (
        "Tamoxifen is converted by CYP2D6 to endoxifen, its most potent active metabolite.",
        "CYP2D6 poor metabolizers form less endoxifen and may have a higher risk of breast cancer recurrence.",
        "For CYP2D6 poor metabolizers an aromatase inhibitor can be considered for postmenopausal women instead of tamoxifen.",
        "Strong CYP2D6 inhibitors should be avoided during tamoxifen therapy.",
    ),
    "cyp2d6-cyp2c19-tcas": (
        "Tricyclic antidepressants such as amitriptyline and nortriptyline are metabolized by CYP2D6 and CYP2C19.",
        "CYP2D6 poor metabolizers and CYP2C19 ultrarapid metabolizers show altered tricyclic antidepressants exposure.",
        "For CYP2D6 ultrarapid or poor metabolizers an alternative drug not metabolized by CYP2D6 is preferred, or tricyclic antidepressants dosing should be guided by therapeutic drug monitoring.",
        "Anticholinergic effects and electrocardiogram changes should be monitored during tricyclic antidepressants therapy.",
    ),
    "ssri-cyp2d6-cyp2c19-cyp2b6-slc6a4-htr2a": (
        "Serotonin reuptake inhibitor antidepressants are metabolized by CYP2D6, CYP2C19 and CYP2B6 depending on the agent.",
        "CYP2C19 poor metabolizers have higher citalopram and escitalopram exposure, while SLC6A4 and HTR2A variants have limited evidence for dosing.",
        "For CYP2C19 poor metabolizers a lower starting dose of citalopram or escitalopram is recommended, and SLC6A4 or HTR2A results are not used for serotonin reuptake inhibitor antidepressants selection.",
        "Response and side effects should be reassessed four to six weeks after starting serotonin reuptake inhibitor antidepressants.",
    ),
    "opioids-cyp2d6-oprm1-comt": (
        "Codeine and tramadol are opioids that require CYP2D6 activation to morphine and O-desmethyltramadol.",
        "CYP2D6 ultrarapid metabolizers form excess active metabolite and face a risk of toxicity, while poor metabolizers get reduced analgesia; OPRM1 and COMT have insufficient evidence for dosing.",
        "For CYP2D6 ultrarapid and poor metabolizers codeine and tramadol should be avoided and a non tramadol and non codeine opioids option selected.",
        "Respiratory depression and pain control should be monitored when opioids are used.",
    ),
    "cyp3a5-tacrolimus": (
        "Tacrolimus is metabolized by CYP3A5 in people who express the enzyme.",
        "CYP3A5 expressers, extensive and intermediate metabolizers, have lower tacrolimus trough concentrations at standard doses.",
        "For CYP3A5 expressers the tacrolimus starting dose can be increased to one and a half to two times the standard dose.",
        "Tacrolimus trough concentrations should guide dose adjustment after transplantation.",
    ),
    "dpyd-fluoropyrimidines": (
        "Fluoropyrimidines such as fluorouracil and capecitabine are inactivated by dihydropyrimidine dehydrogenase encoded by DPYD.",
        "DPYD intermediate and poor metabolizers have reduced enzyme activity and a high risk of severe fluoropyrimidines toxicity.",
        "For DPYD intermediate metabolizers the fluoropyrimidines starting dose should be reduced by fifty percent, and poor metabolizers should avoid fluoropyrimidines.",
        "Neutropenia, mucositis and diarrhea should be monitored closely in the first cycles.",
    ),
    "g6pd-deficiency": (
        "G6PD deficiency reduces the ability of red blood cells to withstand oxidative stress.",
        "People with G6PD deficiency can develop acute hemolytic anemia after exposure to oxidant drugs such as rasburicase, primaquine or dapsone.",
        "For patients with G6PD deficiency high risk oxidant drugs should be avoided and lower risk alternatives chosen.",
        "Hemoglobin and signs of hemolysis should be checked when an oxidant drug cannot be avoided.",
    ),
    "hla-carbamazepine-oxcarbazepine": (
        "Carbamazepine and oxcarbazepine can cause severe cutaneous adverse reactions associated with HLA-B*15:02 and HLA-A*31:01.",
        "Carriers of HLA-B*15:02 have a greatly increased risk of Stevens-Johnson syndrome with carbamazepine and oxcarbazepine.",
        "Patients who carry HLA-B*15:02 or HLA-A*31:01 and have not taken carbamazepine before should use an alternative anticonvulsant.",
        "Skin reactions should be monitored during the first three months of carbamazepine or oxcarbazepine therapy.",
    ),
    "hlab-abacavir": (
        "Abacavir hypersensitivity is strongly associated with the HLA-B*57:01 allele.",
        "Carriers of HLA-B*57:01 have a high risk of abacavir hypersensitivity reactions.",
        "Abacavir is not recommended for patients who are positive for HLA-B*57:01.",
        "Testing for HLA-B*57:01 should be completed before starting abacavir.",
    ),
    "hlab-allopurinol": (
        "Allopurinol induced severe cutaneous adverse reactions are associated with HLA-B*58:01.",
        "Carriers of HLA-B*58:01 have a markedly higher risk of allopurinol hypersensitivity syndrome.",
        "Allopurinol should not be used in patients who carry HLA-B*58:01, and an alternative urate lowering agent should be selected.",
        "Rash and fever should be reported promptly after starting allopurinol.",
    ),
    "ifnl3-peginterferon": (
        "IFNL3 variants rs12979860 and rs8099917 predict response to peginterferon-alpha-based regimens for hepatitis C.",
        "The rs12979860 CC genotype is the favorable genotype, while for rs8099917 the TT genotype is favorable; the two polymorphisms have different favorable alleles.",
        "Patients with an unfavorable IFNL3 genotype have lower sustained virologic response to peginterferon-alpha and should consider regimens without interferon.",
        "Viral load should be measured during peginterferon-alpha therapy to assess response.",
    ),
    "mtrnr1-aminoglycosides": (
        "The MT-RNR1 m.1555A>G variant increases susceptibility to aminoglycosides induced hearing loss.",
        "Carriers of the MT-RNR1 m.1555A>G variant can develop irreversible hearing loss after a single dose of aminoglycosides.",
        "For carriers of MT-RNR1 risk variants aminoglycosides should be avoided unless the infection is severe and no safe alternative exists.",
        "Hearing should be assessed when aminoglycosides must be given to a carrier.",
    ),
    "ryr1-cacna1s-anesthetics": (
        "Pathogenic RYR1 and CACNA1S variants confer susceptibility to malignant hyperthermia.",
        "Carriers of malignant hyperthermia susceptibility variants can develop a hypermetabolic crisis after volatile anesthetic agents or succinylcholine.",
        "Volatile anesthetic agents and succinylcholine are contraindicated in carriers of a pathogenic RYR1 or CACNA1S variant.",
        "End tidal carbon dioxide and temperature should be monitored during anesthesia.",
    ),
    "statins-slco1b1-abcg2-cyp2c9": (
        "Statins exposure is influenced by the SLCO1B1 transporter, the ABCG2 transporter for rosuvastatin and CYP2C9 for fluvastatin.",
        "SLCO1B1 poor function carriers have higher simvastatin exposure and a greater risk of statin associated muscle symptoms.",
        "For SLCO1B1 poor function carriers simvastatin doses above twenty milligrams should be avoided and an alternative among the statins may be preferred.",
        "Muscle symptoms and creatine kinase should be assessed when statins are started.",
    ),
    "tpmt-nudt15-thiopurines": (
        "Thiopurines such as azathioprine and mercaptopurine are inactivated by TPMT, and NUDT15 limits accumulation of active metabolites.",
        "TPMT or NUDT15 poor metabolizers accumulate active thioguanine nucleotides and face severe myelosuppression.",
        "For TPMT or NUDT15 intermediate metabolizers thiopurines should start at a reduced dose, and poor metabolizers should receive a drastically reduced dose.",
        "Blood counts should be monitored weekly after starting thiopurines.",
    ),
    "ugt1a1-atazanavir": (
        "Atazanavir inhibits UGT1A1 and raises unconjugated bilirubin.",
        "UGT1A1 poor metabolizers such as carriers of two UGT1A1*28 alleles often develop jaundice on atazanavir.",
        "For UGT1A1 poor metabolizers an alternative to atazanavir can be considered when jaundice would affect adherence.",
        "Bilirubin and adherence should be reviewed after atazanavir initiation.",
    ),
    "cftr-ivacaftor": (
        "Ivacaftor is a CFTR potentiator that improves chloride channel gating.",
        "Patients with at least one G551D CFTR variant respond to ivacaftor, while homozygous F508del patients do not benefit from ivacaftor alone.",
        "Ivacaftor is recommended for cystic fibrosis patients with one or two copies of a G551D CFTR variant; the dosage for patients aged six years and older is 150 mg every 12 hours.",
        "Liver function tests and eye examinations in children should be monitored during ivacaftor therapy.",
    ),
}

# Guidelines that get extra paragraphs so their document spans two chunks.
LONG = {
    "cyp2c19-clopidogrel", "cyp2c9-vkorc1-cyp4f2-warfarin", "opioids-cyp2d6-oprm1-comt",
    "dpyd-fluoropyrimidines", "tpmt-nudt15-thiopurines", "cftr-ivacaftor",
    "ssri-cyp2d6-cyp2c19-cyp2b6-slc6a4-htr2a", "ifnl3-peginterferon",
}


def join(words):
    if not words:
        return ""
    if len(words) == 1:
        return words[0]
    return ", ".join(words[:-1]) + " and " + words[-1]


def cpic_doc(key, title, genes, drugs):
    mech, pheno, rec, mon = FACTS[key]
    g = join(genes)
    d = join(drugs) if drugs else "oxidant drugs"
    paras = [
        f"{title}. This synthetic sample document summarizes how variation in {g} affects therapy with {d}. "
        f"{mech} The text is written for software testing and is not clinical guidance. "
        f"It follows the structure of a guideline with background, phenotype, recommendation and monitoring sections.",
        f"Gene and phenotype background. {pheno} "
        f"Genotype results for {g} are translated into a phenotype before a recommendation is applied. "
        f"Laboratories report star alleles or named variants, and the phenotype is assigned from the combined activity of both alleles.",
        f"Therapeutic recommendation. {rec} "
        f"Recommendations apply when a genotype result is already available, and testing should not delay urgent treatment. "
        f"The strength of each recommendation reflects the quality of the evidence linking {g} to the outcome with {d}.",
        f"Monitoring and other considerations. {mon} "
        f"Drug interactions, organ function, age and other clinical factors can change exposure to {d} independently of genotype.",
    ]
    if key in LONG:
        paras += [
            f"Pediatric and special populations. Evidence for {d} in children is more limited than in adults, "
            f"and recommendations for {g} are usually extrapolated from adult data when pediatric studies are not available. "
            f"Pregnancy, advanced age, hepatic impairment and renal impairment can all modify exposure and should be weighed together with the {g} phenotype. "
            f"When the phenotype is indeterminate, clinicians may treat the patient as having the most likely phenotype while confirming the result. "
            f"Shared decision making with the patient or caregiver is encouraged whenever an alternative therapy is considered.",
            f"Evidence summary. The association between {g} and response to {d} has been examined in observational cohorts, "
            f"pharmacokinetic studies and, for some outcomes, randomized trials. "
            f"Pharmacokinetic data consistently show that altered {g} activity changes exposure, while clinical outcome data vary in strength. "
            f"Where outcome data are weaker, recommendations are graded as optional rather than strong. "
            f"{pheno}",
            f"Implementation notes. Health systems that adopt preemptive genotyping store {g} results in the electronic health record "
            f"so that clinical decision support can alert prescribers when {d} is ordered. "
            f"Alerts should name the phenotype, state the recommendation and link to supporting evidence. "
            f"Pharmacists can review alerts and document the action taken, including dose changes or selection of an alternative therapy. "
            f"{rec}",
            f"Laboratory testing. Genotyping panels for {g} should cover the variants with known functional impact in the populations served. "
            f"Reports should list the tested variants, the resulting diplotype and the assigned phenotype, and should state the limitations of the assay. "
            f"Rare or novel variants that are not tested can lead to an incorrect phenotype assignment, so a normal result does not exclude altered function. "
            f"Repeat testing is not usually needed because germline genotype does not change over time.",
            f"Patient counseling. Patients should be told that their {g} result can guide therapy with {d} and may also matter for other medications in the future. "
            f"Counseling should explain the phenotype in plain language, describe what the recommendation means for the current prescription and encourage the patient to share the result with every prescriber and pharmacist. "
            f"Written material and a copy of the report help patients keep the information available across care settings.",
        ]
    return {
        "doc_id": f"cpic-{key}",
        "source": "CPIC",
        "guideline_key": key,
        "title": title,
        "body": "\n\n".join(paras),
        "drugs": sorted(set(drugs)),
        "genes": sorted(set(genes)),
    }


# PharmGKB-style clinical annotation records for the phase 2 knowledge base.
PGKB = [
    ("cyp2c19-clopidogrel", "Clinical annotation for CYP2C19*2 and clopidogrel",
     "The CYP2C19*2 allele is associated with decreased formation of the active clopidogrel metabolite and increased risk of major adverse cardiovascular events after percutaneous coronary intervention. Evidence level 1A. Patients carrying one or two no function alleles showed higher on treatment platelet reactivity."),
    ("cyp2c19-clopidogrel", "Drug label annotation for clopidogrel",
     "The clopidogrel label carries a boxed warning about diminished effectiveness in CYP2C19 poor metabolizers. The label advises considering another platelet P2Y12 inhibitor in patients identified as CYP2C19 poor metabolizers."),
    ("cyp2c9-vkorc1-cyp4f2-warfarin", "Clinical annotation for VKORC1 rs9923231 and warfarin",
     "The VKORC1 rs9923231 A allele is associated with lower warfarin dose requirements. Evidence level 1A. CYP2C9*2 and CYP2C9*3 further reduce the required warfarin dose, and CYP4F2*3 is associated with a modest dose increase."),
    ("cftr-ivacaftor", "Drug label annotation for ivacaftor",
     "The ivacaftor label indicates treatment of cystic fibrosis in patients who have at least one CFTR mutation responsive to ivacaftor, including G551D. The recommended dose for patients aged six years and older is 150 mg taken orally every 12 hours with fat containing food."),
    ("ifnl3-peginterferon", "Clinical annotation for IFNL3 rs12979860 and peginterferon-alpha",
     "The rs12979860 CC genotype is associated with higher sustained virologic response to peginterferon-alpha and ribavirin than CT or TT genotypes. For rs8099917 the TT genotype is associated with better response. Evidence level 1A."),
    ("dpyd-fluoropyrimidines", "Clinical annotation for DPYD*2A and fluoropyrimidines",
     "The DPYD*2A variant is associated with increased risk of severe toxicity with fluorouracil and capecitabine. Evidence level 1A. Dose reductions guided by DPYD activity score decrease toxicity without reducing exposure below therapeutic levels."),
    ("tpmt-nudt15-thiopurines", "Clinical annotation for NUDT15 and thiopurines",
     "The NUDT15 rs116855232 T allele is associated with thiopurine induced leukopenia, particularly in patients of East Asian ancestry. Evidence level 1A. TPMT*3A shows a similar association with myelosuppression in patients of European ancestry."),
    ("opioids-cyp2d6-oprm1-comt", "Clinical annotation for CYP2D6 and codeine",
     "CYP2D6 ultrarapid metabolizer status is associated with increased morphine formation from codeine and life threatening toxicity in children after tonsillectomy. Evidence level 1A. The OPRM1 rs1799971 variant has conflicting evidence for opioid dose requirements."),
    ("hlab-abacavir", "Clinical annotation for HLA-B*57:01 and abacavir",
     "HLA-B*57:01 is associated with abacavir hypersensitivity across multiple populations. Evidence level 1A. Prospective screening for HLA-B*57:01 eliminated immunologically confirmed hypersensitivity in clinical trials."),
    ("cyp3a5-tacrolimus", "Clinical annotation for CYP3A5*3 and tacrolimus",
     "The CYP3A5*3 allele is associated with higher tacrolimus dose adjusted trough concentrations. Evidence level 1A. CYP3A5 expressers require higher doses to reach target trough concentrations after kidney transplantation."),
    ("statins-slco1b1-abcg2-cyp2c9", "Clinical annotation for SLCO1B1*5 and simvastatin",
     "The SLCO1B1 rs4149056 C allele is associated with increased simvastatin acid exposure and myopathy. Evidence level 1A. ABCG2 rs2231142 is associated with increased rosuvastatin exposure."),
    ("cyp2d6-tamoxifen", "Clinical annotation for CYP2D6 and tamoxifen",
     "CYP2D6 poor metabolizer status is associated with lower endoxifen concentrations in women treated with tamoxifen. Evidence level 1A for pharmacokinetic outcomes, with mixed results for recurrence outcomes."),
]


def pgkb_docs():
    lex = {k: (g, d) for k, _, g, d in LEXICON}
    out = []
    seen = {}
    for key, title, body in PGKB:
        seen[key] = seen.get(key, 0) + 1
        genes, drugs = lex[key]
        out.append({
            "doc_id": f"pgkb-{key}-{seen[key]}",
            "source": "PharmGKB",
            "guideline_key": key,
            "title": title,
            "body": body,
            "drugs": sorted(set(drugs)),
            "genes": sorted(set(genes)),
        })
    return out


# Query templates: (audience, text). {d} drug phrase, {g} gene phrase.
QUERY_TEMPLATES = [
    ("Provider", "How should {d} dosing change for a patient with a known {g} poor metabolizer phenotype?"),
    ("Provider", "What does the {g} genotype mean for prescribing {d}?"),
    ("Provider", "A patient has a {g} test result on file. Is {d} an appropriate choice?"),
    ("Provider", "Which {g} phenotypes require an alternative to {d}?"),
    ("Provider", "What monitoring is recommended when starting {d} in a patient with reduced {g} function?"),
    ("Provider", "Summarize the pharmacogenomic recommendation for {g} and {d}."),
    ("Provider", "What is the strength of evidence linking {g} variants to {d} response?"),
    ("AdultPatient", "My genetic test shows a {g} variant. Is it safe for me to take {d}?"),
    ("AdultPatient", "Why would my doctor check my {g} result before giving me {d}?"),
    ("PediatricPatient", "My child has a {g} result on file. What should we know before {d} is used?"),
]


def queries():
    out = []
    for key, title, genes, drugs in LEXICON:
        d = join(drugs[:1]) if drugs else "medications that cause oxidative stress"
        g = join(genes)
        for i, (aud, tpl) in enumerate(QUERY_TEMPLATES):
            out.append({
                "query_id": f"{key}-q{i + 1:02d}",
                "guideline_key": key,
                "audience": aud,
                "text": tpl.format(d=d, g=g),
            })
    return out


TS = "2025-01-15T12:00:00Z"


def annotation(qid, group, acc, rel, comp, clar, tp, fn, fp=None):
    rec = {
        "response_ref": {"query_id": qid, "group": group},
        "accuracy": acc, "relevance": rel, "completeness": comp, "clarity": clar,
        "tp": tp, "fn": fn,
        "annotator_id": "reviewer-1", "timestamp": TS,
    }
    if fp is not None:
        rec["fp"] = fp
    return rec


def phase1_260(qs):
    # 234 accuracy fives + 26 fours; 208 completeness fives + 52 fours;
    # recall 1.0 on 234 records and 0.9 on 26.
    out = []
    ifnl3 = [q for q in qs if q["guideline_key"] == "ifnl3-peginterferon"]
    others = [q for q in qs if q["guideline_key"] != "ifnl3-peginterferon"]
    acc4 = {q["query_id"] for q in ifnl3} | {q["query_id"] for q in others[::15][:16]}
    assert len(acc4) == 26
    comp4 = {q["query_id"] for q in qs[::5]}
    assert len(comp4) == 52
    rec09 = {q["query_id"] for q in ifnl3} | {q["query_id"] for q in others[3::15][:16]}
    assert len(rec09) == 26
    # precision/F1 counts only for the ten IFNL3 queries
    ifnl3_fp = [0, 1, 0, 2, 0, 1, 0, 0, 1, 0]
    for q in qs:
        qid = q["query_id"]
        tp, fn = (9, 1) if qid in rec09 else (10, 0)
        fp = None
        if q["guideline_key"] == "ifnl3-peginterferon":
            fp = ifnl3_fp[int(qid[-2:]) - 1]
        out.append(annotation(qid, "phase1", 4 if qid in acc4 else 5, 5, 4 if qid in comp4 else 5, 5, tp, fn, fp))
    return out


# Paired accuracy scores for the 20-query subset. Found by offline search so
# that phase1 -> phase2 gives W- = 10.5 (p > 0.05) and gpt4omini -> phase2
# gives W- = 18.0 (p < 0.05) under the drop-zeros, average-rank convention.
ACC_P1 = [5, 5, 5, 5, 5, 5, 5, 4, 5, 4, 3, 3, 3, 5, 4, 4, 5, 4, 4, 5]
ACC_P2 = [5] * 12 + [4] * 8
ACC_GPT = [4, 3, 5, 4, 5, 5, 4, 4, 4, 3, 2, 5, 5, 5, 3, 4, 3, 5, 2, 3]
COMP = {
    "phase1": [5] * 16 + [4] * 4,
    "phase2": [5] * 20,
    "gpt4omini": [5, 4, 3, 5, 4, 5, 4, 3, 5, 4, 5, 4, 3, 5, 4, 5, 4, 3, 5, 4],
}
CLAR = {"phase1": [5] * 20, "phase2": [5] * 20, "gpt4omini": [5] * 9 + [4] + [5] * 9 + [4]}
# (tp, fn) per record
RECALL = {
    "phase1": [(10, 0)] * 14 + [(9, 1)] * 6,
    "phase2": [(10, 0)] * 18 + [(9, 1)] * 2,
    "gpt4omini": [(10, 0), (7, 3)] * 10,
}


def subset20_ids(qs):
    # first query of the first twenty guidelines
    return [f"{key}-q01" for key, *_ in LEXICON[:20]]


def subset20(qs, group, acc):
    ids = subset20_ids(qs)
    return [
        annotation(qid, group, acc[i], 5, COMP[group][i], CLAR[group][i], *RECALL[group][i])
        for i, qid in enumerate(ids)
    ]


QUIZ_TOPICS = [
    ("clopidogrel", "A CYP2C19 poor metabolizer needs antiplatelet therapy after stent placement. Which choice is most appropriate?",
     ["Standard dose clopidogrel", "Double dose clopidogrel", "Prasugrel or ticagrelor if not contraindicated", "Aspirin alone", "Stop antiplatelet therapy"], [2]),
    ("abacavir", "A patient tests positive for HLA-B*57:01. What is recommended regarding abacavir?",
     ["Start at half dose", "Do not use abacavir", "Use abacavir with antihistamine", "Start normally and monitor", "Repeat the test"], [1]),
    ("warfarin", "Which genes are combined in a genotype guided warfarin dosing algorithm?",
     ["CYP2D6 only", "CYP2C19 and CYP3A5", "CYP2C9, VKORC1 and CYP4F2", "TPMT and NUDT15", "SLCO1B1 only"], [2]),
    ("fluoropyrimidines", "A DPYD intermediate metabolizer is scheduled for capecitabine. What is the recommended start?",
     ["Full dose", "Fifty percent of the standard dose", "Double dose", "Avoid all chemotherapy", "Twenty five percent increase"], [1]),
    ("codeine", "A child who is a CYP2D6 ultrarapid metabolizer needs postoperative analgesia. Which is preferred?",
     ["Codeine", "Tramadol", "A non codeine, non tramadol analgesic", "High dose codeine", "Codeine with monitoring only"], [2]),
    ("tacrolimus", "A kidney transplant recipient is a CYP3A5 expresser. How should the tacrolimus start change?",
     ["Reduce by half", "No change", "Increase to 1.5 to 2 times the standard dose", "Avoid tacrolimus", "Give every other day"], [2]),
    ("ppi", "Which CYP2C19 phenotypes may warrant an increased proton pump inhibitor starting dose?",
     ["Poor metabolizers", "Ultrarapid metabolizers", "Rapid metabolizers", "Intermediate metabolizers", "None of the above"], [1, 2]),
    ("thiopurines", "A patient is a TPMT poor metabolizer. What is appropriate for azathioprine?",
     ["Standard dose", "Drastically reduced dose or alternative", "Increase dose", "Double dosing interval only", "No testing needed"], [1]),
    ("allopurinol", "A patient carries HLA-B*58:01. What should be done about allopurinol?",
     ["Start low and titrate", "Avoid allopurinol", "Use with steroids", "Give standard dose", "Check levels weekly"], [1]),
    ("carbamazepine", "A carbamazepine naive patient carries HLA-B*15:02. What is recommended?",
     ["Use carbamazepine", "Use oxcarbazepine instead", "Use an alternative anticonvulsant not associated with the allele", "Half dose carbamazepine", "Monitor skin only"], [2]),
    ("voriconazole", "A CYP2C19 ultrarapid metabolizer needs antifungal therapy. What is preferred?",
     ["Voriconazole standard dose", "An antifungal not dependent on CYP2C19", "Voriconazole at half dose", "No treatment", "Voriconazole every other day"], [1]),
    ("simvastatin", "An SLCO1B1 poor function carrier needs a statin. Which is appropriate?",
     ["Simvastatin 80 mg", "Simvastatin 40 mg", "An alternative statin or low simvastatin dose", "No statin ever", "Double dose simvastatin"], [2]),
    ("ivacaftor", "A 16 year old with cystic fibrosis has F508del and G551D. What is the ivacaftor dose?",
     ["75 mg daily", "150 mg every 12 hours", "300 mg every 12 hours", "Not indicated", "150 mg weekly"], [1]),
    ("tamoxifen", "A postmenopausal CYP2D6 poor metabolizer needs endocrine therapy. What can be considered?",
     ["Higher tamoxifen dose only", "An aromatase inhibitor", "Stop therapy", "Add paroxetine", "Tamoxifen every other day"], [1]),
    ("atazanavir", "Which finding is expected in UGT1A1 poor metabolizers on atazanavir?",
     ["Hypoglycemia", "Hyperbilirubinemia and jaundice", "Neutropenia", "Hearing loss", "Hemolysis"], [1]),
    ("aminoglycosides", "A carrier of MT-RNR1 m.1555A>G has an infection. What is advised about aminoglycosides?",
     ["Use freely", "Avoid unless no safe alternative", "Double dose", "Use only orally", "No relevance"], [1]),
    ("anesthetics", "A patient with a pathogenic RYR1 variant needs surgery. Which agents are contraindicated?",
     ["Propofol", "Volatile anesthetics and succinylcholine", "Local anesthetics", "Opioids", "Benzodiazepines"], [1]),
    ("g6pd", "Which drug should be avoided in G6PD deficiency?",
     ["Acetaminophen", "Rasburicase", "Amoxicillin", "Metformin", "Lisinopril"], [1]),
    ("peginterferon", "Which IFNL3 rs12979860 genotype is favorable for peginterferon-alpha response?",
     ["TT", "CT", "CC", "GG", "AG"], [2]),
    ("citalopram", "A CYP2C19 poor metabolizer is starting citalopram. What is recommended?",
     ["Higher starting dose", "Lower starting dose", "No change", "Avoid all antidepressants", "Check HTR2A first"], [1]),
]


def quiz():
    return [
        {"item_id": f"quiz-{i + 1:02d}-{topic}", "stem": stem, "choices": choices, "correct": correct}
        for i, (topic, stem, choices, correct) in enumerate(QUIZ_TOPICS)
    ]


def answers(items, wrong_ids, alt_multi=False):
    out = {}
    for it in items:
        correct = it["correct"]
        pick = correct[-1] if (alt_multi and len(correct) > 1) else correct[0]
        if it["item_id"] in wrong_ids:
            pick = next(c for c in range(5) if c not in correct)
        out[it["item_id"]] = pick
    return out


def write_jsonl(path, rows):
    with open(os.path.join(ROOT, path), "w") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


def write_json(path, obj):
    with open(os.path.join(ROOT, path), "w") as f:
        json.dump(obj, f, indent=2, ensure_ascii=False)
        f.write("\n")


def main():
    for d in ("lexicon", "corpus", "data", "fixtures", "fixtures/quiz"):
        os.makedirs(os.path.join(ROOT, d), exist_ok=True)
    assert len(LEXICON) == 26
    write_json("lexicon/cpic26.json", [
        {"guideline_key": k, "genes": g, "drugs": d} for k, _, g, d in LEXICON
    ])
    cpic = [cpic_doc(*row) for row in LEXICON]
    write_jsonl("corpus/sample_corpus.jsonl", cpic + pgkb_docs())
    write_jsonl("corpus/cpic_only.jsonl", cpic)

    qs = queries()
    assert len(qs) == 260
    write_jsonl("data/dataset_260.jsonl", qs)

    write_jsonl("fixtures/phase1_260.jsonl", phase1_260(qs))
    for group, acc in (("phase1", ACC_P1), ("phase2", ACC_P2), ("gpt4omini", ACC_GPT)):
        write_jsonl(f"fixtures/subset20_{group}.jsonl", subset20(qs, group, acc))

    ids = subset20_ids(qs)
    write_json("fixtures/wilcoxon_p1p2.json", {
        "metric": "accuracy", "a": "phase1", "b": "phase2", "alternative": "greater",
        "pairs": [{"query_id": q, "a": a, "b": b} for q, a, b in zip(ids, ACC_P1, ACC_P2)],
    })
    write_json("fixtures/wilcoxon_p2gpt.json", {
        "metric": "accuracy", "a": "gpt4omini", "b": "phase2", "alternative": "greater",
        "pairs": [{"query_id": q, "a": a, "b": b} for q, a, b in zip(ids, ACC_GPT, ACC_P2)],
    })

    items = quiz()
    assert sum(len(i["correct"]) > 1 for i in items) == 1
    write_json("data/quiz20.json", items)
    ids = [i["item_id"] for i in items]
    # Accuracy ladder: 18, 17, 16 and 14 correct out of 20.
    write_json("fixtures/quiz/answers_phase3.json", answers(items, set(ids[3:5]), alt_multi=True))
    write_json("fixtures/quiz/answers_claude37.json", answers(items, set(ids[0:3])))
    write_json("fixtures/quiz/answers_gemini20.json", answers(items, set(ids[10:14])))
    write_json("fixtures/quiz/answers_gpt4omini.json", answers(items, set(ids[12:18])))


if __name__ == "__main__":
    main()
