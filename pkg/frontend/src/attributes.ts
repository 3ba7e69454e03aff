/** Display metadata for attribute rows: labels grouped by facial region.
 *
 * Purely cosmetic; the model sees only signed values by position. The
 * 40-entry set matches the standard facial-attribute labeling; any other
 * gallery width falls back to generic labels in one group.
 */

export interface AttributeMeta {
  index: number;
  label: string;
  group: string;
}

const STANDARD_40: Array<[string, string]> = [
  ["5 o'clock shadow", "facial hair"],
  ["arched eyebrows", "eyes"],
  ["attractive", "overall"],
  ["bags under eyes", "eyes"],
  ["bald", "hair"],
  ["bangs", "hair"],
  ["big lips", "nose & mouth"],
  ["big nose", "nose & mouth"],
  ["black hair", "hair"],
  ["blond hair", "hair"],
  ["blurry", "overall"],
  ["brown hair", "hair"],
  ["bushy eyebrows", "eyes"],
  ["chubby", "face shape"],
  ["double chin", "face shape"],
  ["eyeglasses", "accessories"],
  ["goatee", "facial hair"],
  ["gray hair", "hair"],
  ["heavy makeup", "overall"],
  ["high cheekbones", "face shape"],
  ["male", "overall"],
  ["mouth slightly open", "nose & mouth"],
  ["mustache", "facial hair"],
  ["narrow eyes", "eyes"],
  ["no beard", "facial hair"],
  ["oval face", "face shape"],
  ["pale skin", "overall"],
  ["pointy nose", "nose & mouth"],
  ["receding hairline", "hair"],
  ["rosy cheeks", "face shape"],
  ["sideburns", "facial hair"],
  ["smiling", "nose & mouth"],
  ["straight hair", "hair"],
  ["wavy hair", "hair"],
  ["wearing earrings", "accessories"],
  ["wearing hat", "accessories"],
  ["wearing lipstick", "accessories"],
  ["wearing necklace", "accessories"],
  ["wearing necktie", "accessories"],
  ["young", "overall"],
];

export const GROUP_ORDER = [
  "hair",
  "face shape",
  "eyes",
  "nose & mouth",
  "facial hair",
  "accessories",
  "overall",
];

export function attributeMetadata(nAttrs: number): AttributeMeta[] {
  if (nAttrs === STANDARD_40.length) {
    return STANDARD_40.map(([label, group], index) => ({ index, label, group }));
  }
  return Array.from({ length: nAttrs }, (_, index) => ({
    index,
    label: `attribute ${index + 1}`,
    group: "attributes",
  }));
}

export function groupedAttributes(nAttrs: number): Map<string, AttributeMeta[]> {
  const groups = new Map<string, AttributeMeta[]>();
  for (const meta of attributeMetadata(nAttrs)) {
    const bucket = groups.get(meta.group) ?? [];
    bucket.push(meta);
    groups.set(meta.group, bucket);
  }
  const ordered = new Map<string, AttributeMeta[]>();
  for (const name of [...GROUP_ORDER, ...groups.keys()]) {
    const bucket = groups.get(name);
    if (bucket && !ordered.has(name)) ordered.set(name, bucket);
  }
  return ordered;
}
