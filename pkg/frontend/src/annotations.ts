/**
 * Offload annotations.
 *
 * A function becomes offloadable by carrying a JSDoc marker plus typed
 * parameter declarations covering every parameter:
 *
 *     /**
 *      * @offload arc_dist            <- marker; optional kernel name
 *      * @param {int} size  pair count
 *      * @param {int} seed  generator seed
 *      *&#47;
 *     export function arcDistSum(size: number, seed: number): number { ... }
 *
 * Parsing rejects functions without the marker (NotOffloadableError) and
 * functions whose bodies reference identifiers that are neither parameters,
 * locals, nor whitelisted globals (AnnotationError): every free input must be
 * a declared parameter, otherwise remote execution could not reproduce it.
 */

import ts from 'typescript';

export type ParamType = 'int' | 'float' | 'string' | 'bool';

export interface DeclaredParam {
  name: string;
  type: ParamType;
  description: string;
}

export interface AnnotatedFunction {
  name: string;
  kernel: string;
  params: DeclaredParam[];
  /** exact source text of the function declaration, byte-for-byte */
  source: string;
}

export class NotOffloadableError extends Error {}
export class AnnotationError extends Error {}

const PARAM_TYPES = new Set<string>(['int', 'float', 'string', 'bool']);

/** Ambient names a kernel body may use without declaring them. */
const ALLOWED_GLOBALS = new Set<string>([
  'Math', 'Number', 'BigInt', 'NaN', 'Infinity', 'undefined',
]);

export function parseAnnotations(source: string): AnnotatedFunction[] {
  const file = ts.createSourceFile('input.ts', source, ts.ScriptTarget.ES2022, true);
  const found: AnnotatedFunction[] = [];
  file.forEachChild((node) => {
    if (ts.isFunctionDeclaration(node) && node.name) {
      const fn = parseFunctionNode(node, file);
      if (fn !== null) found.push(fn);
    }
  });
  if (found.length === 0) {
    throw new NotOffloadableError('no function carries an @offload marker');
  }
  return found;
}

export function parseFunction(source: string, name?: string): AnnotatedFunction {
  const all = parseAnnotations(source);
  if (name === undefined) {
    if (all.length > 1) {
      throw new AnnotationError(
        `source defines ${all.length} offloadable functions; pass a name`,
      );
    }
    return all[0];
  }
  const match = all.find((fn) => fn.name === name);
  if (!match) throw new NotOffloadableError(`function ${name} is not offloadable`);
  return match;
}

function parseFunctionNode(
  node: ts.FunctionDeclaration,
  file: ts.SourceFile,
): AnnotatedFunction | null {
  const tags = ts.getJSDocTags(node);
  const marker = tags.find((t) => t.tagName.text === 'offload');
  if (!marker) return null;

  const name = node.name!.text;
  const kernel =
    (typeof marker.comment === 'string' ? marker.comment : '').trim().split(/\s+/)[0] || name;

  const params: DeclaredParam[] = [];
  for (const tag of tags) {
    if (!ts.isJSDocParameterTag(tag)) continue;
    const pname = tag.name.getText(file);
    const rawType = tag.typeExpression ? tag.typeExpression.type.getText(file) : '';
    const normalized = rawType === 'number' ? 'float' : rawType;
    if (!PARAM_TYPES.has(normalized)) {
      throw new AnnotationError(
        `${name}: parameter ${pname} has unsupported type {${rawType || '?'}}`,
      );
    }
    const comment = typeof tag.comment === 'string' ? tag.comment : '';
    params.push({ name: pname, type: normalized as ParamType, description: comment.trim() });
  }

  const actual = node.parameters.map((p) => p.name.getText(file));
  const declared = new Set(params.map((p) => p.name));
  for (const pname of actual) {
    if (!declared.has(pname)) {
      throw new AnnotationError(`${name}: parameter ${pname} lacks an @param declaration`);
    }
  }
  for (const pname of declared) {
    if (!actual.includes(pname)) {
      throw new AnnotationError(`${name}: @param ${pname} does not match any parameter`);
    }
  }

  const free = collectFreeIdentifiers(node, new Set(actual));
  if (free.size > 0) {
    throw new AnnotationError(
      `${name}: undeclared free variable(s): ${[...free].sort().join(', ')}`,
    );
  }

  return { name, kernel, params, source: node.getText(file) };
}

function collectFreeIdentifiers(
  node: ts.FunctionDeclaration,
  paramNames: Set<string>,
): Set<string> {
  const declared = new Set(paramNames);
  const free = new Set<string>();
  if (!node.body) return free;

  // first pass: every binding introduced anywhere inside the body
  const collectBindings = (n: ts.Node): void => {
    if (ts.isVariableDeclaration(n) || ts.isParameter(n) || ts.isBindingElement(n)) {
      if (ts.isIdentifier(n.name)) declared.add(n.name.text);
    } else if (
      (ts.isFunctionDeclaration(n) || ts.isClassDeclaration(n)) &&
      n.name !== undefined
    ) {
      declared.add(n.name.text);
    }
    n.forEachChild(collectBindings);
  };
  collectBindings(node.body);

  // second pass: identifiers read in value position
  const visit = (n: ts.Node): void => {
    if (ts.isIdentifier(n) && isValueUse(n)) {
      const text = n.text;
      if (!declared.has(text) && !ALLOWED_GLOBALS.has(text)) free.add(text);
    }
    n.forEachChild(visit);
  };
  visit(node.body);
  return free;
}

function isValueUse(id: ts.Identifier): boolean {
  const parent = id.parent;
  if (ts.isPropertyAccessExpression(parent) && parent.name === id) return false;
  if (ts.isPropertyAssignment(parent) && parent.name === id) return false;
  if (
    (ts.isVariableDeclaration(parent) || ts.isParameter(parent) || ts.isBindingElement(parent)) &&
    parent.name === id
  ) {
    return false;
  }
  if ((ts.isFunctionDeclaration(parent) || ts.isClassDeclaration(parent)) && parent.name === id) {
    return false;
  }
  if (ts.isTypeReferenceNode(parent) || ts.isTypeQueryNode(parent)) return false;
  return true;
}

export function validateArgs(
  fn: AnnotatedFunction,
  args: Record<string, unknown>,
): void {
  for (const param of fn.params) {
    if (!(param.name in args)) {
      throw new AnnotationError(`missing argument ${param.name}`);
    }
    const value = args[param.name];
    const ok =
      param.type === 'string'
        ? typeof value === 'string'
        : param.type === 'bool'
          ? typeof value === 'boolean'
          : typeof value === 'number' &&
            Number.isFinite(value) &&
            (param.type === 'float' || Number.isInteger(value));
    if (!ok) {
      throw new AnnotationError(
        `argument ${param.name} is not a valid ${param.type}: ${String(value)}`,
      );
    }
  }
  for (const key of Object.keys(args)) {
    if (!fn.params.some((p) => p.name === key)) {
      throw new AnnotationError(`unexpected argument ${key}`);
    }
  }
}
